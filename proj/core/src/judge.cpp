// SPDX-License-Identifier: Apache-2.0
#include "revopt/judge.hpp"

#include <cmath>
#include <regex>

#include <fmt/format.h>

#include "revopt/log.hpp"
#include "revopt/prompt.hpp"
#include "revopt/text.hpp"

namespace revopt {

namespace {

const std::regex& score_marker() {
  static const std::regex re(R"(Total Score:\s*[<*\[]?\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)))",
                             std::regex::ECMAScript);
  return re;
}

std::string prompt_name(Category c) { return fmt::format("judge_{}", to_string(c)); }

}  // namespace

Judgment parse_judgment(std::string_view text) {
  const std::string s(text);
  std::smatch last;
  bool found = false;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), score_marker());
       it != std::sregex_iterator(); ++it) {
    last = *it;
    found = true;
  }
  if (!found) {
    throw JudgmentParseError("judge output has no 'Total Score: <number>' marker", s);
  }
  Judgment j;
  j.raw = std::stod(last[1].str());
  if (!(j.raw >= kMinRawScore && j.raw <= kMaxRawScore)) {
    throw ScoreRangeError(fmt::format("judge score {} outside [1.0, 5.0]", last[1].str()), s);
  }
  j.justification = std::string(trim(std::string_view(s).substr(0, last.position(0))));
  const auto words = word_count(j.justification);
  if (words > kMaxJustificationWords) {
    j.overlong = true;
    logger()->warn("judge justification has {} words (limit {})", words, kMaxJustificationWords);
  }
  return j;
}

double normalize(double raw) {
  if (!(raw >= kMinRawScore && raw <= kMaxRawScore)) {
    throw PreconditionError(fmt::format("score {} outside [1.0, 5.0]", raw));
  }
  return (raw - kMinRawScore) / (kMaxRawScore - kMinRawScore);
}

double denormalize(double normalized) {
  if (!(normalized >= 0.0 && normalized <= 1.0)) {
    throw PreconditionError(fmt::format("normalized score {} outside [0, 1]", normalized));
  }
  return kMinRawScore + normalized * (kMaxRawScore - kMinRawScore);
}

double overall(const std::array<double, 4>& normalized, const CategoryWeights& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(weights[i] > 0.0)) {
      throw PreconditionError(fmt::format("weight for {} must be positive",
                                          to_string(kAllCategories[i])));
    }
    num += weights[i] * normalized[i];
    den += weights[i];
  }
  return num / den;
}

double overall(std::span<const CategoryScore> scores, const CategoryWeights& weights) {
  std::array<double, 4> normalized{};
  std::array<bool, 4> seen{};
  for (const auto& s : scores) {
    auto& flag = seen[index_of(s.category)];
    if (flag) {
      throw PreconditionError(fmt::format("duplicate score for category {}", to_string(s.category)));
    }
    flag = true;
    normalized[index_of(s.category)] = s.normalized;
  }
  for (auto c : kAllCategories) {
    if (!seen[index_of(c)]) {
      throw PreconditionError(fmt::format("missing score for category {}", to_string(c)));
    }
  }
  return overall(normalized, weights);
}

JudgeConfig JudgeConfig::with_default_prompts(
    const prompts::AppIdentity& app, const std::optional<std::filesystem::path>& prompts_dir) {
  JudgeConfig config;
  for (auto c : kAllCategories) {
    config.prompts[index_of(c)] = prompts::load(prompt_name(c), app, prompts_dir);
  }
  return config;
}

void JudgeConfig::validate() const {
  for (auto c : kAllCategories) {
    if (prompts[index_of(c)].empty()) {
      throw PreconditionError(fmt::format("judge prompt for {} is empty", to_string(c)));
    }
    if (!(weights[index_of(c)] > 0.0)) {
      throw PreconditionError(fmt::format("judge weight for {} must be positive", to_string(c)));
    }
  }
  if (!(category_threshold >= 0.0 && category_threshold <= 1.0)) {
    throw PreconditionError("category_threshold must lie in [0, 1]");
  }
  if (parse_retry_budget < 0) throw PreconditionError("parse_retry_budget must be >= 0");
}

Judge::Judge(Gateway& gateway, JudgeConfig config) : gateway_(gateway), config_(std::move(config)) {
  config_.validate();
}

std::string Judge::render(const Review& review, std::string_view response,
                          const RetrievedContext& context, Category category) const {
  const bool accuracy = category == Category::accuracy;
  if (accuracy && !review.expert_response) {
    throw PreconditionError(fmt::format(
        "review {}: accuracy judging requires an expert response", review.id));
  }
  const std::string_view answer = accuracy ? std::string_view(*review.expert_response) : "";
  const std::string_view ctx = accuracy ? std::string_view(context.rendered) : "";
  return substitute(config_.prompts[index_of(category)], {{"{query}", review.text},
                                                         {"{result}", response},
                                                         {"{answer}", answer},
                                                         {"{context}", ctx}});
}

CategoryScore Judge::judge_category(const Review& review, std::string_view response,
                                    const RetrievedContext& context, Category category) const {
  CompletionRequest request;
  request.user_text = render(review, response, context, category);
  request.temperature = config_.temperature;
  request.max_output_tokens = config_.max_output_tokens;
  request.model_tag = config_.model_tag;

  const int attempts = 1 + config_.parse_retry_budget;
  for (int attempt = 1;; ++attempt) {
    const auto result = gateway_.complete(request);
    try {
      auto j = parse_judgment(result.text);
      return CategoryScore{category, j.raw, normalize(j.raw), std::move(j.justification)};
    } catch (const JudgmentError& e) {
      if (attempt >= attempts) {
        throw JudgeFailure(fmt::format("review {} / {}: unusable judge output after {} attempts: "
                                       "{}",
                                       review.id, to_string(category), attempt, e.what()),
                           review.id, category);
      }
      logger()->warn("review {} / {}: {} (attempt {} of {}); retrying", review.id,
                     to_string(category), e.what(), attempt, attempts);
    }
  }
}

Feedback Judge::judge_full(const Review& review, std::string_view response,
                           const RetrievedContext& context) const {
  Feedback fb;
  fb.review_id = review.id;
  fb.response_text = std::string(response);
  for (auto c : kAllCategories) {
    try {
      fb.scores[index_of(c)] = judge_category(review, response, context, c);
    } catch (const JudgeFailure&) {
      throw;
    } catch (const PreconditionError&) {
      throw;
    } catch (const Error& e) {
      throw JudgeFailure(fmt::format("review {} / {}: {}", review.id, to_string(c), e.what()),
                         review.id, c);
    }
  }
  fb.overall = overall(std::span<const CategoryScore>(fb.scores), config_.weights);

  std::string weak;
  for (const auto& s : fb.scores) {
    if (s.normalized < config_.category_threshold) {
      if (!weak.empty()) weak += '\n';
      weak += s.justification;
    }
  }
  if (config_.explicit_suggestions && !weak.empty()) {
    CompletionRequest request;
    request.user_text = fmt::format(
        "A customer service agent answered the customer review below. Reviewers flagged these "
        "weaknesses:\n{}\nCustomer review: {}\nAgent response: {}\nList concise, concrete "
        "suggestions to improve the agent's response.",
        weak, review.text, response);
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;
    request.model_tag = config_.model_tag;
    try {
      fb.suggestions = gateway_.complete(request).text;
    } catch (const Error& e) {
      throw JudgeFailure(fmt::format("review {}: suggestion call failed: {}", review.id, e.what()),
                         review.id, std::nullopt);
    }
  } else {
    fb.suggestions = std::move(weak);
  }
  return fb;
}

}  // namespace revopt
