// SPDX-License-Identifier: Apache-2.0
#include "revopt/http_backend.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace revopt {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  const auto& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw PreconditionError(fmt::format("http backend: endpoint '{}' is not an absolute URL", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpBackend::id() const { return fmt::format("http:{}", options_.endpoint); }

std::string HttpBackend::chat_body(const CompletionRequest& request) const {
  json messages = json::array();
  if (request.system_text) {
    messages.push_back({{"role", "system"}, {"content", *request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  return json{{"model", request.model_tag.empty() ? options_.model_tag : request.model_tag},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}}
      .dump();
}

std::string HttpBackend::post(const std::string& path, const std::string& body) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  auto res = client.Post(base_path_ + path, headers, body, "application/json");
  if (!res) {
    throw TransientError(
        fmt::format("POST {}{}: {}", options_.endpoint, path, httplib::to_string(res.error())), 0);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError(fmt::format("POST {}{}: HTTP {}", options_.endpoint, path, res->status),
                         res->status);
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(fmt::format("POST {}{}: HTTP {}: {}", options_.endpoint, path, res->status,
                                   res->body.substr(0, 200)));
  }
  return res->body;
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  const std::string raw = post(options_.chat_path, chat_body(request));
  CompletionResult result;
  result.backend_id = id();
  try {
    const json payload = json::parse(raw);
    const auto& message = payload.at("choices").at(0).at("message");
    result.text = message.at("content").get<std::string>();
    if (auto it = payload.find("usage"); it != payload.end() && it->is_object()) {
      result.input_tokens = it->value("prompt_tokens", std::int64_t{0});
      result.output_tokens = it->value("completion_tokens", std::int64_t{0});
    }
  } catch (const json::exception& e) {
    throw MalformedPayloadError(fmt::format("malformed chat completion payload: {}", e.what()));
  }
  return result;
}

std::vector<EmbeddingVector> HttpBackend::embed(std::span<const std::string> texts) {
  const json body{{"model", options_.embedding_model},
                  {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string raw = post(options_.embeddings_path, body.dump());
  std::vector<EmbeddingVector> out(texts.size());
  try {
    const json payload = json::parse(raw);
    const auto& data = payload.at("data");
    if (data.size() != texts.size()) {
      throw MalformedPayloadError(
          fmt::format("embeddings payload has {} items for {} inputs", data.size(), texts.size()));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].value("index", i);
      if (slot >= out.size()) throw MalformedPayloadError("embedding index out of range");
      out[slot].values = data[i].at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw MalformedPayloadError(fmt::format("malformed embeddings payload: {}", e.what()));
  }
  return out;
}

}  // namespace revopt
