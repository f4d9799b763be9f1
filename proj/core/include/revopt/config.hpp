// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revopt/error.hpp"
#include "revopt/generator.hpp"
#include "revopt/judge.hpp"
#include "revopt/llm.hpp"
#include "revopt/optimizer.hpp"
#include "revopt/prompts.hpp"
#include "revopt/rag.hpp"

namespace revopt {

/// Every problem found in a configuration, reported together.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct BackendSettings {
  /// "scripted" or "http".
  std::string kind = "scripted";
  std::string endpoint;
  std::string model_tag;
  std::string embedding_model;
  std::optional<std::filesystem::path> script;
  double rpm = 0.0;
  int timeout_seconds = 60;
};

struct AppConfig {
  prompts::AppIdentity app;
  BackendSettings backend;
  RetryPolicy retry;
  /// "hashing" (local, deterministic) or "backend".
  std::string embedder = "hashing";
  std::size_t embedding_dimension = 256;
  SegmentOptions segment;
  std::size_t top_k = 4;
  GenerationConfig generation;
  CategoryWeights weights = kDefaultWeights;
  int parse_retry_budget = 2;
  double judge_temperature = 0.0;
  bool explicit_suggestions = false;
  OptimizerConfig optimizer;
  double rewriter_temperature = 0.7;
  std::optional<std::filesystem::path> prompts_dir;
  std::filesystem::path runs_dir = "runs";
  std::uint64_t annotation_seed = 0;

  /// Throws ConfigError listing every violated requirement.
  void validate() const;

  JudgeConfig judge_config() const;
  PromptGenConfig rewriter_config() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Environment name for a dotted key: `backend.model_tag` -> `SCRABLE_BACKEND_MODEL_TAG`.
std::string env_name(const std::string& dotted_key);

/// Builds a config from a JSON document whose keys are nested objects or
/// dotted names. `SCRABLE_*` variables override file values. Unknown keys and
/// ill-typed values are collected into one ConfigError. Does not validate.
AppConfig config_from_json(const nlohmann::json& doc, const EnvLookup& env = process_env);

/// `path` if given, else `$SCRABLE_CONFIG`, else defaults plus environment.
AppConfig load_config(const std::optional<std::filesystem::path>& path,
                      const EnvLookup& env = process_env);

/// Local hashing embedder or the http backend's embedding endpoint.
std::shared_ptr<Embedder> make_embedder(const AppConfig& config, const EnvLookup& env = process_env);

/// Gateway over the configured backend and embedder. The API key for http
/// backends is read from `LLM_API_KEY`.
std::unique_ptr<Gateway> make_gateway(const AppConfig& config, const EnvLookup& env = process_env);

}  // namespace revopt
