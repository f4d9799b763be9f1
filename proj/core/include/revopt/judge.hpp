// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "revopt/category.hpp"
#include "revopt/corpus.hpp"
#include "revopt/error.hpp"
#include "revopt/llm.hpp"
#include "revopt/prompts.hpp"
#include "revopt/rag.hpp"

namespace revopt {

inline constexpr double kMinRawScore = 1.0;
inline constexpr double kMaxRawScore = 5.0;
inline constexpr std::size_t kMaxJustificationWords = 150;

/// Judge output that could not be turned into a score. Carries the text.
class JudgmentError : public Error {
 public:
  JudgmentError(const std::string& what, std::string text) : Error(what), text_(std::move(text)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// No `Total Score: <number>` marker in the judge output.
class JudgmentParseError : public JudgmentError {
 public:
  using JudgmentError::JudgmentError;
};

/// The marker was found but the score lies outside [1.0, 5.0].
class ScoreRangeError : public JudgmentError {
 public:
  using JudgmentError::JudgmentError;
};

struct Judgment {
  double raw = 0.0;
  std::string justification;
  /// Justification exceeds the 150-word instruction. Informational only.
  bool overlong = false;
};

/// Extracts the score from the last `Total Score:` marker that is followed by
/// a decimal number. The justification is everything before that marker,
/// trimmed.
Judgment parse_judgment(std::string_view text);

/// Min-max normalisation of a 1-5 score onto [0, 1].
double normalize(double raw);
double denormalize(double normalized);

struct CategoryScore {
  Category category = Category::relevancy;
  double raw = kMinRawScore;
  double normalized = 0.0;
  std::string justification;

  bool operator==(const CategoryScore&) const = default;
};

using CategoryWeights = std::array<double, 4>;

/// Accuracy counts twice.
inline constexpr CategoryWeights kDefaultWeights{1.0, 2.0, 1.0, 1.0};
inline constexpr CategoryWeights kEqualWeights{1.0, 1.0, 1.0, 1.0};

/// Weighted mean of normalised scores. Requires exactly one score per
/// category and positive weights.
double overall(std::span<const CategoryScore> scores, const CategoryWeights& weights = kDefaultWeights);

/// Same as above for normalised values indexed by category.
double overall(const std::array<double, 4>& normalized,
               const CategoryWeights& weights = kDefaultWeights);

struct Feedback {
  std::string review_id;
  std::string response_text;
  /// Indexed by category (see index_of).
  std::array<CategoryScore, 4> scores{};
  std::string suggestions;
  double overall = 0.0;

  const CategoryScore& score(Category c) const { return scores[index_of(c)]; }
  bool operator==(const Feedback&) const = default;
};

struct JudgeConfig {
  CategoryWeights weights = kDefaultWeights;
  /// Judge prompt per category with `{query}`, `{result}`, `{answer}` and
  /// optionally `{context}` slots.
  std::array<std::string, 4> prompts;
  double category_threshold = 0.9;
  /// Re-asks after malformed or out-of-range output before failing.
  int parse_retry_budget = 2;
  double temperature = 0.0;
  int max_output_tokens = 800;
  std::string model_tag;
  /// Issue a fifth call asking for explicit improvement suggestions instead of
  /// reusing the below-threshold justifications.
  bool explicit_suggestions = false;

  /// Shipped prompts with the app identity filled in.
  static JudgeConfig with_default_prompts(
      const prompts::AppIdentity& app,
      const std::optional<std::filesystem::path>& prompts_dir = std::nullopt);
  void validate() const;
};

/// A category (or the whole feedback) could not be judged.
class JudgeFailure : public Error {
 public:
  JudgeFailure(const std::string& what, std::string review_id, std::optional<Category> category)
      : Error(what), review_id_(std::move(review_id)), category_(category) {}
  const std::string& review_id() const { return review_id_; }
  std::optional<Category> category() const { return category_; }

 private:
  std::string review_id_;
  std::optional<Category> category_;
};

/// Stateless apart from the gateway it calls through.
class Judge {
 public:
  Judge(Gateway& gateway, JudgeConfig config);

  /// Builds the judge prompt for one category. The expert answer and the
  /// retrieved context are only passed to the accuracy prompt.
  std::string render(const Review& review, std::string_view response,
                     const RetrievedContext& context, Category category) const;

  CategoryScore judge_category(const Review& review, std::string_view response,
                               const RetrievedContext& context, Category category) const;

  /// Scores all four categories. Any category failure fails the whole call.
  Feedback judge_full(const Review& review, std::string_view response,
                      const RetrievedContext& context) const;

  const JudgeConfig& config() const { return config_; }

 private:
  Gateway& gateway_;
  JudgeConfig config_;
};

}  // namespace revopt
