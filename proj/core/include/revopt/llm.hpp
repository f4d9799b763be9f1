// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "revopt/error.hpp"

namespace revopt {

struct CompletionRequest {
  std::optional<std::string> system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string model_tag;
};

struct CompletionResult {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::string backend_id;
  int attempts = 1;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// Retryable transport failure (HTTP 429, 5xx, connection error).
class TransientError : public Error {
 public:
  TransientError(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Non-retryable backend failure, including exhausting the retry budget.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// The backend replied but the payload did not have the expected shape.
class MalformedPayloadError : public BackendError {
 public:
  using BackendError::BackendError;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string id() const = 0;
  /// One attempt; throws TransientError for conditions worth retrying.
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;

  /// Upper bound of the full-jitter sleep before attempt `attempt + 1`.
  std::chrono::milliseconds ceiling(int attempt) const;
};

/// Token bucket admitting at most `requests_per_minute` calls per minute with
/// a burst of the same size. Zero disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute = 0.0);
  void acquire();

 private:
  using clock = std::chrono::steady_clock;
  double rate_per_second_;
  double capacity_;
  double tokens_;
  clock::time_point last_;
  std::mutex mutex_;
};

/// Uniform entry point for completions and embeddings. Safe for concurrent use
/// as long as the wrapped backends are.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Embedder> embedder,
          RetryPolicy retry = {}, double requests_per_minute = 0.0);

  /// Result text has trailing whitespace stripped and is otherwise verbatim.
  CompletionResult complete(const CompletionRequest& request);

  /// One vector per input in input order, uniform dimension.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts);

  Embedder& embedder() { return *embedder_; }
  const RetryPolicy& retry_policy() const { return retry_; }
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  template <class Call>
  auto with_retry(const std::string& what, Call&& call) -> std::invoke_result_t<Call, int>;

  std::shared_ptr<CompletionBackend> backend_;
  std::shared_ptr<Embedder> embedder_;
  RetryPolicy retry_;
  RateLimiter limiter_;
  Sleeper sleeper_;
  std::mutex jitter_mutex_;
  std::mt19937_64 jitter_;
};

/// Presents a Gateway as an Embedder so embedding calls get its retry,
/// rate limiting and validation.
class GatewayEmbedder final : public Embedder {
 public:
  explicit GatewayEmbedder(Gateway& gateway) : gateway_(gateway) {}
  std::string id() const override { return gateway_.embedder().id(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    return gateway_.embed(texts);
  }

 private:
  Gateway& gateway_;
};

}  // namespace revopt
