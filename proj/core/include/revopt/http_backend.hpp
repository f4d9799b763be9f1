// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>

#include "revopt/llm.hpp"

namespace revopt {

struct HttpBackendOptions {
  /// Base URL, e.g. `https://api.openai.com/v1` or `http://127.0.0.1:8080`.
  std::string endpoint;
  std::string api_key;
  /// Default model when a request carries none.
  std::string model_tag;
  std::string embedding_model = "text-embedding-3-small";
  std::string chat_path = "/chat/completions";
  std::string embeddings_path = "/embeddings";
  std::chrono::seconds timeout{60};
};

/// Client for the JSON chat-completion protocol (`messages` array with roles,
/// `model`, `temperature`, `max_tokens`) and the matching embeddings route.
/// 429 and 5xx replies and connection failures raise TransientError so the
/// Gateway can retry them.
class HttpBackend final : public CompletionBackend, public Embedder {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  std::string id() const override;
  CompletionResult complete(const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  /// Request body for `request`, exposed for tests of the wire format.
  std::string chat_body(const CompletionRequest& request) const;

 private:
  std::string post(const std::string& path, const std::string& body);

  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string base_path_;
};

}  // namespace revopt
