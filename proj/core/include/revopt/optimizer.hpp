// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "revopt/corpus.hpp"
#include "revopt/corpus_store.hpp"
#include "revopt/generator.hpp"
#include "revopt/judge.hpp"
#include "revopt/llm.hpp"
#include "revopt/prompt.hpp"
#include "revopt/rag.hpp"

namespace revopt {

struct OptimizerConfig {
  /// Loop stops once the average overall score reaches this.
  double threshold = 0.95;
  int max_iterations = 5;
  /// Share (percent) of lowest-scoring reviews fed to the rewriter.
  double n_pct = 30.0;
  /// Share (percent) of additional random reviews.
  double m_pct = 10.0;
  std::uint64_t seed = 0;
  double category_threshold = 0.9;
  /// Concurrent reviews in scored_response_gen.
  std::size_t workers = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& j);
};

struct ImprovementMember {
  std::string review_id;
  Feedback feedback;
};

/// Reviews selected for improvement: the lowest scorers followed by a random
/// sample of the remainder.
struct ImprovementSet {
  std::vector<ImprovementMember> members;
  std::vector<std::string> lowest_ids;
  std::vector<std::string> random_ids;

  /// Members' (already threshold-filtered) suggestions, one block per member
  /// that has any. Empty when nothing is left to improve.
  std::string aggregated_suggestions() const;
};

/// Sizes of the two subsets for N reviews: floor(n% N) with a minimum of 1,
/// and floor(m% N) capped by what remains.
std::pair<std::size_t, std::size_t> improvement_sizes(std::size_t n_reviews, double n_pct,
                                                      double m_pct);

double average_score(std::span<const Feedback> feedback);

/// Lowest overall first (ties by review id ascending); the random part is
/// drawn without replacement from the rest with seed `config.seed ^ iteration`.
ImprovementSet identify_ir(std::span<const Feedback> feedback, const OptimizerConfig& config,
                           int iteration);

/// Rewriter could not produce a valid template.
class PromptGenFailure : public Error {
 public:
  using Error::Error;
};

struct PromptGenConfig {
  /// Meta-prompt with `{question}` (current template) and `{context}`
  /// (aggregated suggestions).
  std::string meta_prompt;
  int max_attempts = 2;
  double temperature = 0.7;
  int max_output_tokens = 1500;
  std::string model_tag;

  static PromptGenConfig with_default_prompt(const prompts::AppIdentity& app,
                                             const std::optional<std::filesystem::path>& dir = {});
};

/// Asks the model to rewrite `current` given `suggestions`. The child keeps
/// lineage (parent id, iteration + 1). Throws PromptGenFailure when no valid
/// template arrives within the attempt budget.
PromptTemplate prompt_gen(Gateway& gateway, const PromptGenConfig& config,
                          const PromptTemplate& current, std::string_view suggestions);

enum class Termination { threshold, max_iterations, fixed_point };
std::string_view to_string(Termination t);

struct OptimizationResult {
  PromptTemplate final_template;
  PromptTemplate best_template;
  double best_avg = 0.0;
  std::vector<RunRecord> iterations;
  Termination terminated_by = Termination::max_iterations;
};

/// Generation + judging + iterative prompt rewriting over one review set.
class Optimizer {
 public:
  Optimizer(Gateway& gateway, const VectorIndex& index, JudgeConfig judge,
            GenerationConfig generation, PromptGenConfig rewriter, OptimizerConfig config);

  /// One Feedback per review in review order. Every review needs an expert
  /// response. Fails atomically.
  std::vector<Feedback> scored_response_gen(const PromptTemplate& tmpl,
                                            const ReviewSet& reviews) const;

  /// Runs the loop until the average overall score reaches the threshold,
  /// `max_iterations` rewrites were scored, or a fixed point is hit (two
  /// consecutive averages within 1e-6, nothing to improve, or a failed
  /// rewrite). Each scored iteration is persisted to `store` when given.
  OptimizationResult optimize(const ReviewSet& reviews, const PromptTemplate& base,
                              const RunStore* store = nullptr,
                              const std::string& run_id = "run") const;

  const OptimizerConfig& config() const { return config_; }

 private:
  Gateway& gateway_;
  const VectorIndex& index_;
  Judge judge_;
  ResponseGenerator generator_;
  PromptGenConfig rewriter_;
  OptimizerConfig config_;
};

}  // namespace revopt
