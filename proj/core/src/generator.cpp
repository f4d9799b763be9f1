// SPDX-License-Identifier: Apache-2.0
#include "revopt/generator.hpp"

#include <fmt/format.h>

#include "revopt/text.hpp"

namespace revopt {

ResponseGenerator::ResponseGenerator(Gateway& gateway, const VectorIndex& index,
                                     GenerationConfig config)
    : gateway_(gateway), index_(index), config_(std::move(config)) {
  if (config_.top_k < 1) throw PreconditionError("generation top_k must be >= 1");
}

GeneratedResponse ResponseGenerator::generate(const Review& review,
                                              const PromptTemplate& tmpl) const {
  GeneratedResponse out;
  out.review_id = review.id;
  out.prompt_id = tmpl.id;
  try {
    GatewayEmbedder embedder(gateway_);
    out.context_used = retrieve(index_, embedder, review.text, config_.top_k);
    CompletionRequest request;
    request.user_text = render_prompt(tmpl, out.context_used.rendered, review.text);
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;
    request.model_tag = config_.model_tag;
    out.text = gateway_.complete(request).text;
  } catch (const TemplateError&) {
    throw;
  } catch (const Error& e) {
    throw GenerationError(fmt::format("review {}: generation failed: {}", review.id, e.what()),
                          review.id);
  }
  if (trim(out.text).empty()) {
    throw GenerationEmptyError(fmt::format("review {}: model returned an empty response", review.id),
                               review.id);
  }
  return out;
}

}  // namespace revopt
