// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revopt/corpus.hpp"
#include "revopt/judge.hpp"
#include "revopt/metrics.hpp"

namespace revopt {

/// One line of a judged-responses file.
struct JudgedResponse {
  std::string response_id;
  Feedback feedback;
};

nlohmann::json to_json(const JudgedResponse& r);
JudgedResponse judged_response_from_json(const nlohmann::json& j);
std::vector<JudgedResponse> load_judged(const std::filesystem::path& path);
void write_judged(const std::vector<JudgedResponse>& rows, std::ostream& out);

/// Normalised scores per category (category order) plus overall, keyed by
/// response id.
struct JudgeScores {
  std::array<ScoreVector, 4> categories;
  ScoreVector overall;
};

/// Overall uses the judge weights.
JudgeScores llm_scores(const std::vector<JudgedResponse>& judged,
                       const CategoryWeights& weights = kDefaultWeights);

/// Per response: mean raw over raters, normalised. Overall is the unweighted
/// mean of the four categories, for responses scored on all four.
JudgeScores human_scores(const std::vector<HumanScoreRow>& rows);

struct ComparisonRow {
  std::string label;
  std::size_t n = 0;
  std::optional<double> kendall_tau;
  std::optional<double> pearson;
  std::optional<double> spearman;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

struct ComparisonReport {
  /// Relevancy, Accuracy, App Specificity, Grammatical Correctness, Overall.
  std::vector<ComparisonRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Aligned text table; undefined statistics print as "X".
  std::string render_table() const;
};

/// Pairs by response id per row. Throws PreconditionError when a row has no
/// overlapping items.
ComparisonReport compare_judges(const JudgeScores& llm, const JudgeScores& human);

struct AgreementRow {
  Category category = Category::relevancy;
  std::size_t items = 0;
  std::optional<double> krippendorff_alpha;
  std::optional<double> fleiss_kappa;
  double mean = 0.0;
  /// Sample standard deviation of raw scores.
  double stddev = 0.0;
};

/// Items are response ids, raters are rater ids.
AgreementMatrix agreement_matrix(const std::vector<HumanScoreRow>& rows, Category category);

std::vector<AgreementRow> human_agreement(const std::vector<HumanScoreRow>& rows);
nlohmann::json to_json(const std::vector<AgreementRow>& rows);
std::string render_agreement_table(const std::vector<AgreementRow>& rows);

}  // namespace revopt
