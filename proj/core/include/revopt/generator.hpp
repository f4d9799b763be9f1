// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "revopt/corpus.hpp"
#include "revopt/error.hpp"
#include "revopt/llm.hpp"
#include "revopt/prompt.hpp"
#include "revopt/rag.hpp"

namespace revopt {

struct GeneratedResponse {
  std::string review_id;
  std::string prompt_id;
  std::string text;
  RetrievedContext context_used;

  /// Stable identifier of this (prompt, review) response: "<prompt_id>/<review_id>".
  std::string response_id() const { return prompt_id + "/" + review_id; }
};

struct GenerationConfig {
  double temperature = 0.7;
  int max_output_tokens = 800;
  std::string model_tag;
  std::size_t top_k = 4;
};

/// Generation failed for one review; carries its id.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::string review_id)
      : Error(what), review_id_(std::move(review_id)) {}
  const std::string& review_id() const { return review_id_; }

 private:
  std::string review_id_;
};

/// The model returned only whitespace.
class GenerationEmptyError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

class ResponseGenerator {
 public:
  ResponseGenerator(Gateway& gateway, const VectorIndex& index, GenerationConfig config = {});

  /// Retrieves context for the raw review text, renders `tmpl` and asks the
  /// model for a reply. The retrieved context is attached for audit.
  GeneratedResponse generate(const Review& review, const PromptTemplate& tmpl) const;

  const GenerationConfig& config() const { return config_; }

 private:
  Gateway& gateway_;
  const VectorIndex& index_;
  GenerationConfig config_;
};

}  // namespace revopt
