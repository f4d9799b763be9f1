// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revopt/corpus.hpp"
#include "revopt/judge.hpp"
#include "revopt/prompt.hpp"

namespace revopt {

/// Reads a line-delimited JSON review file (`id`, `text`, optional
/// `expert_response`, `split`, `source`). Preserves file order. Errors name
/// the offending line; duplicate ids are rejected.
ReviewSet load_reviews(const std::filesystem::path& path);
ReviewSet parse_reviews(std::istream& in, std::string name);
void write_reviews(const ReviewSet& set, const std::filesystem::path& path);
void write_reviews(const ReviewSet& set, std::ostream& out);

/// Tags exactly `train_count` reviews as train (chosen uniformly at random
/// from `seed`) and the rest as test. Order is preserved.
ReviewSet split_dataset(const ReviewSet& set, std::size_t train_count, std::uint64_t seed);

inline constexpr const char* kHumanScoreHeader = "rater_id,review_id,response_id,category,raw";

/// Reads a human score CSV with header `rater_id,review_id,response_id,category,raw`
/// (further columns are ignored). `raw` is rounded to one decimal place.
std::vector<HumanScoreRow> import_human_scores(const std::filesystem::path& path);
std::vector<HumanScoreRow> parse_human_scores(std::istream& in, const std::string& name = "<csv>");
void write_human_scores(const std::vector<HumanScoreRow>& rows, std::ostream& out);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& s);

/// One iteration of an optimisation run.
struct RunRecord {
  std::string run_id;
  int iteration = 0;
  PromptTemplate prompt;
  std::vector<Feedback> feedback;
  double avg_overall = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config_snapshot = nlohmann::json::object();
  double wall_time = 0.0;
  /// Share of reviews whose overall meets the optimiser threshold.
  double pass_rate = 0.0;

  bool operator==(const RunRecord&) const = default;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Append-only run artifacts: `<root>/<run_id>/iter_<k>.json`. A single writer
/// per run directory; concurrent readers are fine.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  /// Persists `record`; refuses to overwrite and requires iterations to
  /// increase within a run. Returns the written path.
  std::filesystem::path record_run(const RunRecord& record) const;

  /// All iterations of `run_id`, ordered by iteration.
  std::vector<RunRecord> load_run(const std::string& run_id) const;

  /// Marks a run as failed; partial iterations stay on disk.
  void mark_failed(const std::string& run_id, const std::string& reason) const;
  bool is_failed(const std::string& run_id) const;

  std::filesystem::path run_dir(const std::string& run_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace revopt
