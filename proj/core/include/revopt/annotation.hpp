// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "revopt/corpus.hpp"
#include "revopt/error.hpp"
#include "revopt/generator.hpp"

namespace revopt {

/// One (review, response) pair to be scored on all four categories. Only
/// task_id, review_text and response_text are ever sent to raters.
struct AnnotationTask {
  std::string task_id;
  std::string review_text;
  std::string response_text;
  // server side only
  std::string review_id;
  std::string response_id;
  std::string variant;

  bool operator==(const AnnotationTask&) const = default;
};

/// Payload served to raters.
nlohmann::json blind_json(const AnnotationTask& task);

/// Per review (in review order): the base response, then the optimised one.
/// Reviews missing from either file are skipped. Task ids are opaque hashes.
std::vector<AnnotationTask> build_tasks(const ReviewSet& reviews,
                                        const std::vector<GeneratedResponse>& base,
                                        const std::vector<GeneratedResponse>& optimized);

/// Seeded permutation of task indices for one rater.
std::vector<std::size_t> rater_order(std::size_t task_count, const std::string& rater,
                                     std::uint64_t seed);

/// The rater already scored this task and category.
class ConflictError : public Error {
 public:
  using Error::Error;
};

struct ScoreEntry {
  Category category = Category::relevancy;
  double raw = 1.0;
};

struct ScoreSubmission {
  std::string task_id;
  std::string rater;
  std::vector<ScoreEntry> scores;
};

/// Parses `{task_id, rater, category, raw}` or
/// `{task_id, rater, scores: [{category, raw}, ...]}`.
ScoreSubmission parse_submission(const nlohmann::json& body);

/// Tasks and submitted scores persisted under one directory
/// (`tasks.json`, append-only `scores.jsonl`). Reopening resumes the study.
/// Thread-safe; writes are serialised.
class AnnotationStore {
 public:
  /// Creates the study, or reopens it when `dir/tasks.json` exists (the
  /// stored tasks must then equal `tasks`).
  AnnotationStore(std::filesystem::path dir, std::vector<AnnotationTask> tasks, std::uint64_t seed);

  /// Reopens an existing study.
  static std::unique_ptr<AnnotationStore> open(const std::filesystem::path& dir);

  /// First task in the rater's order not yet scored on every category.
  std::optional<AnnotationTask> next_for(const std::string& rater) const;
  /// Tasks the rater has scored on every category.
  std::size_t completed(const std::string& rater) const;
  std::size_t task_count() const { return tasks_.size(); }
  const std::vector<AnnotationTask>& tasks() const { return tasks_; }

  /// Validates every entry first, then persists all of them. Throws
  /// NotFoundError (unknown task), PreconditionError (bad raw or rater),
  /// ConflictError (already scored).
  void submit(const ScoreSubmission& submission);

  std::vector<HumanScoreRow> rows() const;
  /// CSV accepted by import_human_scores; `unblind` appends a variant column.
  std::string export_csv(bool unblind = false) const;

 private:
  static std::pair<std::vector<AnnotationTask>, std::uint64_t> read_study(
      const std::filesystem::path& dir);
  void load_scores();
  const AnnotationTask* find(const std::string& task_id) const;

  std::filesystem::path dir_;
  std::vector<AnnotationTask> tasks_;
  std::uint64_t seed_;
  struct Stored {
    HumanScoreRow row;
    std::string task_id;
  };
  std::vector<Stored> scores_;
  mutable std::mutex mutex_;
};

/// HTTP front end: GET /api/annotation/next?rater=, POST /api/annotation/score,
/// GET /api/annotation/export, static files at `/`.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, std::optional<std::filesystem::path> static_dir = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace revopt
