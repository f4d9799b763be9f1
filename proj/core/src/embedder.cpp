// SPDX-License-Identifier: Apache-2.0
#include "revopt/embedder.hpp"

#include <cmath>

#include <fmt/format.h>

#include "revopt/text.hpp"

namespace revopt {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw PreconditionError("hashing embedder dimension must be positive");
}

std::string HashingEmbedder::id() const { return fmt::format("hashing-{}", dimension_); }

EmbeddingVector HashingEmbedder::embed_one(std::string_view text) const {
  EmbeddingVector out;
  out.values.assign(dimension_, 0.0);
  for (const auto& term : word_terms(text)) {
    out.values[fnv1a64(term) % dimension_] += 1.0;
  }
  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : out.values) v /= norm;
  }
  return out;
}

std::vector<EmbeddingVector> HashingEmbedder::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

}  // namespace revopt
