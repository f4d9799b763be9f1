// SPDX-License-Identifier: Apache-2.0
#include "revopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "revopt/log.hpp"
#include "revopt/parallel.hpp"
#include "revopt/text.hpp"

namespace revopt {

using nlohmann::json;

namespace {
constexpr double kFixedPointTolerance = 1e-6;
}

void OptimizerConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw PreconditionError("optimizer threshold must lie in (0, 1]");
  }
  if (max_iterations < 1) throw PreconditionError("max_iterations must be positive");
  if (n_pct < 0.0 || m_pct < 0.0 || n_pct + m_pct > 100.0) {
    throw PreconditionError("n_pct and m_pct must be non-negative with n_pct + m_pct <= 100");
  }
  if (!(category_threshold >= 0.0 && category_threshold <= 1.0)) {
    throw PreconditionError("category_threshold must lie in [0, 1]");
  }
}

json OptimizerConfig::to_json() const {
  return json{{"threshold", threshold},   {"max_iterations", max_iterations},
              {"n_pct", n_pct},           {"m_pct", m_pct},
              {"seed", seed},             {"category_threshold", category_threshold},
              {"workers", workers}};
}

OptimizerConfig OptimizerConfig::from_json(const json& j) {
  OptimizerConfig c;
  c.threshold = j.value("threshold", c.threshold);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.n_pct = j.value("n_pct", c.n_pct);
  c.m_pct = j.value("m_pct", c.m_pct);
  c.seed = j.value("seed", c.seed);
  c.category_threshold = j.value("category_threshold", c.category_threshold);
  c.workers = j.value("workers", c.workers);
  c.validate();
  return c;
}

std::string ImprovementSet::aggregated_suggestions() const {
  std::string out;
  for (const auto& m : members) {
    if (trim(m.feedback.suggestions).empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += fmt::format("Review {} (overall {:.3f}):\n{}", m.review_id, m.feedback.overall,
                       trim(m.feedback.suggestions));
  }
  return out;
}

std::pair<std::size_t, std::size_t> improvement_sizes(std::size_t n_reviews, double n_pct,
                                                      double m_pct) {
  if (n_reviews == 0) return {0, 0};
  const auto pct = [n_reviews](double p) {
    // Epsilon absorbs binary rounding in p * N / 100 (e.g. 30% of 10).
    return static_cast<std::size_t>(std::floor(p * static_cast<double>(n_reviews) / 100.0 + 1e-9));
  };
  const std::size_t lowest = std::min(n_reviews, std::max<std::size_t>(1, pct(n_pct)));
  const std::size_t random = std::min(n_reviews - lowest, pct(m_pct));
  return {lowest, random};
}

double average_score(std::span<const Feedback> feedback) {
  if (feedback.empty()) throw PreconditionError("average_score of an empty feedback list");
  double sum = 0.0;
  for (const auto& f : feedback) sum += f.overall;
  return sum / static_cast<double>(feedback.size());
}

ImprovementSet identify_ir(std::span<const Feedback> feedback, const OptimizerConfig& config,
                           int iteration) {
  if (feedback.empty()) throw PreconditionError("identify_ir needs at least one feedback");
  const auto [n_lowest, n_random] = improvement_sizes(feedback.size(), config.n_pct, config.m_pct);

  std::vector<std::size_t> order(feedback.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (feedback[a].overall != feedback[b].overall) return feedback[a].overall < feedback[b].overall;
    return feedback[a].review_id < feedback[b].review_id;
  });

  ImprovementSet set;
  for (std::size_t i = 0; i < n_lowest; ++i) {
    const auto& f = feedback[order[i]];
    set.lowest_ids.push_back(f.review_id);
    set.members.push_back({f.review_id, f});
  }
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_lowest), order.end());
  std::sort(rest.begin(), rest.end());
  std::vector<std::size_t> picked;
  std::mt19937_64 rng(config.seed ^ static_cast<std::uint64_t>(iteration));
  std::sample(rest.begin(), rest.end(), std::back_inserter(picked), n_random, rng);
  for (auto i : picked) {
    set.random_ids.push_back(feedback[i].review_id);
    set.members.push_back({feedback[i].review_id, feedback[i]});
  }
  return set;
}

PromptGenConfig PromptGenConfig::with_default_prompt(
    const prompts::AppIdentity& app, const std::optional<std::filesystem::path>& dir) {
  PromptGenConfig c;
  c.meta_prompt = prompts::load("prompt_optimization", app, dir);
  return c;
}

PromptTemplate prompt_gen(Gateway& gateway, const PromptGenConfig& config,
                          const PromptTemplate& current, std::string_view suggestions) {
  if (trim(suggestions).empty()) {
    throw PreconditionError("prompt_gen: no suggestions, nothing to improve");
  }
  validate_template(current.text);
  CompletionRequest request;
  request.user_text = substitute(config.meta_prompt,
                                 {{kQuestionSlot, current.text}, {kContextSlot, suggestions}});
  request.temperature = config.temperature;
  request.max_output_tokens = config.max_output_tokens;
  request.model_tag = config.model_tag;

  std::string last_problem;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    const auto reply = gateway.complete(request);
    const std::string text(trim(reply.text));
    try {
      validate_template(text);
    } catch (const TemplateError& e) {
      last_problem = e.what();
      logger()->warn("rewritten prompt rejected (attempt {} of {}): {}", attempt,
                     config.max_attempts, e.what());
      continue;
    }
    const int child_iteration = current.iteration + 1;
    const std::string root = current.parent_id ? current.id.substr(0, current.id.rfind("-iter"))
                                               : current.id;
    return PromptTemplate{fmt::format("{}-iter{}", root, child_iteration), text, child_iteration,
                          current.id};
  }
  throw PromptGenFailure(fmt::format("no valid template after {} attempts: {}",
                                     config.max_attempts, last_problem));
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::threshold: return "threshold";
    case Termination::max_iterations: return "max_iterations";
    case Termination::fixed_point: return "fixed_point";
  }
  return "unknown";
}

namespace {

JudgeConfig with_threshold(JudgeConfig judge, double category_threshold) {
  judge.category_threshold = category_threshold;
  return judge;
}

}  // namespace

Optimizer::Optimizer(Gateway& gateway, const VectorIndex& index, JudgeConfig judge,
                     GenerationConfig generation, PromptGenConfig rewriter, OptimizerConfig config)
    : gateway_(gateway),
      index_(index),
      judge_(gateway, with_threshold(std::move(judge), config.category_threshold)),
      generator_(gateway, index, std::move(generation)),
      rewriter_(std::move(rewriter)),
      config_(config) {
  config_.validate();
  if (rewriter_.max_attempts < 1) throw PreconditionError("rewriter max_attempts must be >= 1");
}

std::vector<Feedback> Optimizer::scored_response_gen(const PromptTemplate& tmpl,
                                                     const ReviewSet& reviews) const {
  for (const auto& r : reviews.reviews) {
    if (!r.expert_response) {
      throw PreconditionError(fmt::format("review {} has no expert response", r.id));
    }
  }
  validate_template(tmpl.text);
  std::vector<Feedback> feedback(reviews.size());
  parallel_for(reviews.size(), config_.workers, [&](std::size_t i) {
    const auto& review = reviews.reviews[i];
    const auto response = generator_.generate(review, tmpl);
    feedback[i] = judge_.judge_full(review, response.text, response.context_used);
  });
  return feedback;
}

OptimizationResult Optimizer::optimize(const ReviewSet& reviews, const PromptTemplate& base,
                                       const RunStore* store, const std::string& run_id) const {
  validate_template(base.text);
  if (reviews.empty()) throw PreconditionError("optimize needs at least one review");

  OptimizationResult result;
  const json snapshot = config_.to_json();
  auto score_and_record = [&](const PromptTemplate& tmpl, int iteration) {
    const auto started = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.run_id = run_id;
    rec.iteration = iteration;
    rec.prompt = tmpl;
    rec.feedback = scored_response_gen(tmpl, reviews);
    rec.avg_overall = average_score(rec.feedback);
    const auto passing = std::count_if(rec.feedback.begin(), rec.feedback.end(),
                                       [&](const Feedback& f) { return f.overall >= config_.threshold; });
    rec.pass_rate = static_cast<double>(passing) / static_cast<double>(rec.feedback.size());
    rec.seed = config_.seed;
    rec.config_snapshot = snapshot;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    logger()->info("run {} iteration {}: avg overall {:.4f}, {:.0f}% of reviews at threshold",
                   run_id, iteration, rec.avg_overall, 100.0 * rec.pass_rate);
    if (store) store->record_run(rec);
    result.iterations.push_back(rec);
    return rec.avg_overall;
  };

  try {
    PromptTemplate current = base;
    double avg = score_and_record(current, 0);
    result.best_template = current;
    result.best_avg = avg;
    result.terminated_by = Termination::max_iterations;

    for (int k = 1; k <= config_.max_iterations; ++k) {
      const auto& last = result.iterations.back().feedback;
      const auto ir = identify_ir(last, config_, k - 1);
      const auto suggestions = ir.aggregated_suggestions();
      if (suggestions.empty()) {
        logger()->info("run {}: no below-threshold suggestions left; stopping", run_id);
        result.terminated_by = Termination::fixed_point;
        break;
      }
      PromptTemplate child;
      try {
        child = prompt_gen(gateway_, rewriter_, current, suggestions);
      } catch (const PromptGenFailure& e) {
        logger()->warn("run {}: prompt rewrite failed, keeping current prompt: {}", run_id,
                       e.what());
        result.terminated_by = Termination::fixed_point;
        break;
      }
      const double prev = avg;
      avg = score_and_record(child, k);
      current = child;
      if (avg > result.best_avg) {
        result.best_avg = avg;
        result.best_template = current;
      }
      if (avg >= config_.threshold) {
        result.terminated_by = Termination::threshold;
        break;
      }
      if (std::abs(avg - prev) < kFixedPointTolerance) {
        result.terminated_by = Termination::fixed_point;
        break;
      }
    }
    result.final_template = current;
  } catch (const std::exception& e) {
    if (store) store->mark_failed(run_id, e.what());
    throw;
  }
  return result;
}

}  // namespace revopt
