// SPDX-License-Identifier: Apache-2.0
#include "revopt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "revopt/embedder.hpp"
#include "revopt/http_backend.hpp"
#include "revopt/scripted_backend.hpp"

namespace revopt {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else {
    out[prefix] = node;
  }
}

// Typed reads that record a problem instead of throwing.
class Reader {
 public:
  Reader(std::map<std::string, json> values, std::vector<std::string>& problems)
      : values_(std::move(values)), problems_(problems) {}

  template <class T>
  void read(const std::string& key, T& target) {
    known_.push_back(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    try {
      target = it->second.get<T>();
    } catch (const json::exception&) {
      problems_.push_back(fmt::format("{}: unexpected value {}", key, it->second.dump()));
    }
  }

  void read_path(const std::string& key, std::optional<std::filesystem::path>& target) {
    std::optional<std::string> s;
    read(key, s);
    if (s && !s->empty()) target = *s;
  }

  void report_unknown() {
    for (const auto& [key, value] : values_) {
      if (std::find(known_.begin(), known_.end(), key) == known_.end()) {
        problems_.push_back(fmt::format("{}: unknown key", key));
      }
    }
  }

  const std::vector<std::string>& known() const { return known_; }

 private:
  std::map<std::string, json> values_;
  std::vector<std::string> known_;
  std::vector<std::string>& problems_;
};

// Every accepted key; environment overrides are looked up for these.
const std::vector<std::string>& all_keys() {
  static const std::vector<std::string> keys{
      "app.name",
      "app.full_name",
      "backend.kind",
      "backend.endpoint",
      "backend.model_tag",
      "backend.embedding_model",
      "backend.script",
      "backend.rpm",
      "backend.timeout_seconds",
      "retry.max_attempts",
      "retry.base_delay_ms",
      "retry.factor",
      "embedder.kind",
      "embedder.dimension",
      "rag.chunk_size",
      "rag.overlap",
      "rag.k",
      "generation.temperature",
      "generation.max_output_tokens",
      "judge.weights",
      "judge.parse_retry_budget",
      "judge.temperature",
      "judge.explicit_suggestions",
      "optimizer.threshold",
      "optimizer.max_iterations",
      "optimizer.n_pct",
      "optimizer.m_pct",
      "optimizer.seed",
      "optimizer.category_threshold",
      "optimizer.rewriter_temperature",
      "workers",
      "paths.prompts",
      "paths.runs",
      "annotation.seed",
  };
  return keys;
}

json parse_env_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::exception&) {
    return raw;
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

std::string env_name(const std::string& dotted_key) {
  std::string out = "SCRABLE_";
  for (char c : dotted_key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

AppConfig config_from_json(const json& doc, const EnvLookup& env) {
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError({"configuration document must be an object"});
  std::map<std::string, json> values;
  flatten(doc, "", values);
  // judge.weights is a map; fold its leaves back into one object.
  const std::string weights_prefix = "judge.weights.";
  for (auto it = values.begin(); it != values.end();) {
    if (it->first.rfind(weights_prefix, 0) == 0) {
      values["judge.weights"][it->first.substr(weights_prefix.size())] = it->second;
      it = values.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& key : all_keys()) {
    if (auto v = env(env_name(key))) values[key] = parse_env_value(*v);
  }

  AppConfig c;
  Reader r(std::move(values), problems);
  r.read("app.name", c.app.name);
  r.read("app.full_name", c.app.full_name);
  r.read("backend.kind", c.backend.kind);
  r.read("backend.endpoint", c.backend.endpoint);
  r.read("backend.model_tag", c.backend.model_tag);
  r.read("backend.embedding_model", c.backend.embedding_model);
  r.read_path("backend.script", c.backend.script);
  r.read("backend.rpm", c.backend.rpm);
  r.read("backend.timeout_seconds", c.backend.timeout_seconds);
  r.read("retry.max_attempts", c.retry.max_attempts);
  std::int64_t base_ms = c.retry.base_delay.count();
  r.read("retry.base_delay_ms", base_ms);
  c.retry.base_delay = std::chrono::milliseconds(base_ms);
  r.read("retry.factor", c.retry.factor);
  r.read("embedder.kind", c.embedder);
  r.read("embedder.dimension", c.embedding_dimension);
  r.read("rag.chunk_size", c.segment.chunk_size);
  r.read("rag.overlap", c.segment.overlap);
  r.read("rag.k", c.top_k);
  r.read("generation.temperature", c.generation.temperature);
  r.read("generation.max_output_tokens", c.generation.max_output_tokens);
  std::map<std::string, double> weights;
  r.read("judge.weights", weights);
  for (const auto& [name, w] : weights) {
    if (auto cat = parse_category(name)) {
      c.weights[index_of(*cat)] = w;
    } else {
      problems.push_back(fmt::format("judge.weights: unknown category {}", name));
    }
  }
  r.read("judge.parse_retry_budget", c.parse_retry_budget);
  r.read("judge.temperature", c.judge_temperature);
  r.read("judge.explicit_suggestions", c.explicit_suggestions);
  r.read("optimizer.threshold", c.optimizer.threshold);
  r.read("optimizer.max_iterations", c.optimizer.max_iterations);
  r.read("optimizer.n_pct", c.optimizer.n_pct);
  r.read("optimizer.m_pct", c.optimizer.m_pct);
  r.read("optimizer.seed", c.optimizer.seed);
  r.read("optimizer.category_threshold", c.optimizer.category_threshold);
  r.read("optimizer.rewriter_temperature", c.rewriter_temperature);
  r.read("workers", c.optimizer.workers);
  r.read_path("paths.prompts", c.prompts_dir);
  std::optional<std::filesystem::path> runs;
  r.read_path("paths.runs", runs);
  if (runs) c.runs_dir = *runs;
  r.read("annotation.seed", c.annotation_seed);
  r.report_unknown();
  c.generation.top_k = c.top_k;
  c.generation.model_tag = c.backend.model_tag;
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

AppConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  std::optional<std::filesystem::path> source = path;
  if (!source) {
    if (auto p = env("SCRABLE_CONFIG")) source = *p;
  }
  json doc = json::object();
  if (source) {
    std::ifstream in(*source);
    if (!in) throw NotFoundError(fmt::format("cannot open config {}", source->string()));
    try {
      doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
      throw ConfigError({fmt::format("{}: {}", source->string(), e.what())});
    }
  }
  return config_from_json(doc, env);
}

void AppConfig::validate() const {
  std::vector<std::string> problems;
  if (app.name.empty() || app.name == prompts::AppIdentity{}.name) {
    problems.push_back("app.name is required");
  }
  if (app.full_name.empty() || app.full_name == prompts::AppIdentity{}.full_name) {
    problems.push_back("app.full_name is required");
  }
  if (backend.kind == "scripted") {
    if (!backend.script) problems.push_back("backend.script is required for the scripted backend");
  } else if (backend.kind == "http") {
    if (backend.endpoint.empty()) problems.push_back("backend.endpoint is required for the http backend");
    if (backend.model_tag.empty()) problems.push_back("backend.model_tag is required for the http backend");
  } else {
    problems.push_back(fmt::format("backend.kind must be scripted or http, got {}", backend.kind));
  }
  if (backend.rpm < 0) problems.push_back("backend.rpm must be >= 0");
  if (backend.timeout_seconds <= 0) problems.push_back("backend.timeout_seconds must be > 0");
  if (retry.max_attempts < 1) problems.push_back("retry.max_attempts must be >= 1");
  if (retry.base_delay.count() < 0) problems.push_back("retry.base_delay_ms must be >= 0");
  if (retry.factor < 1.0) problems.push_back("retry.factor must be >= 1");
  if (embedder != "hashing" && embedder != "backend") {
    problems.push_back(fmt::format("embedder.kind must be hashing or backend, got {}", embedder));
  }
  if (embedder == "backend" && backend.kind != "http") {
    problems.push_back("embedder.kind backend requires backend.kind http");
  }
  if (embedding_dimension == 0) problems.push_back("embedder.dimension must be > 0");
  if (segment.chunk_size == 0) problems.push_back("rag.chunk_size must be > 0");
  if (segment.overlap >= segment.chunk_size) problems.push_back("rag.overlap must be < rag.chunk_size");
  if (top_k == 0) problems.push_back("rag.k must be > 0");
  if (generation.max_output_tokens <= 0) problems.push_back("generation.max_output_tokens must be > 0");
  for (Category cat : kAllCategories) {
    if (!(weights[index_of(cat)] > 0)) {
      problems.push_back(fmt::format("judge.weights.{} must be > 0", to_string(cat)));
    }
  }
  if (parse_retry_budget < 0) problems.push_back("judge.parse_retry_budget must be >= 0");
  try {
    optimizer.validate();
  } catch (const Error& e) {
    problems.push_back(fmt::format("optimizer: {}", e.what()));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

JudgeConfig AppConfig::judge_config() const {
  JudgeConfig j = JudgeConfig::with_default_prompts(app, prompts_dir);
  j.weights = weights;
  j.category_threshold = optimizer.category_threshold;
  j.parse_retry_budget = parse_retry_budget;
  j.temperature = judge_temperature;
  j.model_tag = backend.model_tag;
  j.explicit_suggestions = explicit_suggestions;
  return j;
}

PromptGenConfig AppConfig::rewriter_config() const {
  PromptGenConfig p = PromptGenConfig::with_default_prompt(app, prompts_dir);
  p.temperature = rewriter_temperature;
  p.model_tag = backend.model_tag;
  return p;
}

namespace {

HttpBackendOptions http_options(const AppConfig& config, const EnvLookup& env) {
  HttpBackendOptions o;
  o.endpoint = config.backend.endpoint;
  o.api_key = env("LLM_API_KEY").value_or("");
  o.model_tag = config.backend.model_tag;
  o.embedding_model = config.backend.embedding_model;
  o.timeout = std::chrono::seconds(config.backend.timeout_seconds);
  return o;
}

}  // namespace

std::shared_ptr<Embedder> make_embedder(const AppConfig& config, const EnvLookup& env) {
  if (config.embedder == "backend") return std::make_shared<HttpBackend>(http_options(config, env));
  return std::make_shared<HashingEmbedder>(config.embedding_dimension);
}

std::unique_ptr<Gateway> make_gateway(const AppConfig& config, const EnvLookup& env) {
  std::shared_ptr<CompletionBackend> backend;
  if (config.backend.kind == "http") {
    backend = std::make_shared<HttpBackend>(http_options(config, env));
  } else {
    if (!config.backend.script) throw ConfigError({"backend.script is required for the scripted backend"});
    backend = ScriptedBackend::from_file(*config.backend.script);
  }
  return std::make_unique<Gateway>(std::move(backend), make_embedder(config, env), config.retry,
                                   config.backend.rpm);
}

}  // namespace revopt
