// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "revopt/llm.hpp"
#include "revopt/log.hpp"
#include "revopt/text.hpp"

namespace revopt {

std::chrono::milliseconds RetryPolicy::ceiling(int attempt) const {
  const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, attempt - 1);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::min(ms, 60'000.0)));
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      last_(clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_second_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = clock::now();
    const std::chrono::duration<double> elapsed = now - last_;
    tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_second_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    std::this_thread::sleep_for(wait);
  }
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<Embedder> embedder,
                 RetryPolicy retry, double requests_per_minute)
    : backend_(std::move(backend)),
      embedder_(std::move(embedder)),
      retry_(retry),
      limiter_(requests_per_minute),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      jitter_(std::random_device{}()) {
  if (!backend_) throw PreconditionError("gateway: no completion backend configured");
  if (!embedder_) throw PreconditionError("gateway: no embedder configured");
  if (retry_.max_attempts < 1) throw PreconditionError("gateway: retry budget must be >= 1");
}

template <class Call>
auto Gateway::with_retry(const std::string& what, Call&& call) -> std::invoke_result_t<Call, int> {
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire();
    try {
      auto result = call(attempt);
      if (attempt > 1) logger()->info("{} succeeded on attempt {}", what, attempt);
      return result;
    } catch (const TransientError& e) {
      if (attempt >= retry_.max_attempts) {
        throw BackendError(fmt::format("{} failed after {} attempts: {}", what, attempt, e.what()));
      }
      std::chrono::milliseconds delay{0};
      if (const auto cap = retry_.ceiling(attempt); cap.count() > 0) {
        std::lock_guard lock(jitter_mutex_);
        delay = std::chrono::milliseconds(
            std::uniform_int_distribution<std::int64_t>(0, cap.count())(jitter_));
      }
      logger()->warn("{}: attempt {} of {} failed (status {}): {}; retrying in {} ms", what,
                     attempt, retry_.max_attempts, e.status(), e.what(), delay.count());
      sleeper_(delay);
    }
  }
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  if (request.user_text.empty()) throw PreconditionError("completion request has empty user text");
  if (!(request.temperature >= 0.0)) throw PreconditionError("completion temperature must be >= 0");
  if (request.max_output_tokens <= 0) throw PreconditionError("max_output_tokens must be positive");

  return with_retry(backend_->id() + " completion", [&](int attempt) {
    CompletionResult result = backend_->complete(request);
    result.text = std::string(rtrim(result.text));
    result.attempts = attempt;
    return result;
  });
}

std::vector<EmbeddingVector> Gateway::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw PreconditionError("embed: empty input list");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw PreconditionError(fmt::format("embed: input {} is empty", i));
  }
  auto vectors = with_retry(embedder_->id() + " embedding",
                            [&](int) { return embedder_->embed(texts); });
  if (vectors.size() != texts.size()) {
    throw ConsistencyError(fmt::format("embed: {} inputs produced {} vectors", texts.size(),
                                       vectors.size()));
  }
  const std::size_t dim = vectors.front().dimension();
  if (dim == 0) throw ConsistencyError("embed: zero-dimensional embedding");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dimension() != dim) {
      throw ConsistencyError(fmt::format("embed: dimension mismatch in batch ({} vs {} at {})",
                                         dim, vectors[i].dimension(), i));
    }
    for (double v : vectors[i].values) {
      if (!std::isfinite(v)) throw ConsistencyError("embed: non-finite embedding value");
    }
  }
  return vectors;
}

}  // namespace revopt
