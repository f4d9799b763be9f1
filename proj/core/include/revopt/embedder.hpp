// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "revopt/llm.hpp"

namespace revopt {

/// 64-bit FNV-1a. Stable across platforms; used wherever a hash leaks into
/// persisted or user-visible output.
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic bag-of-words embedder for tests and offline use.
///
/// Text is split on non-alphanumeric ASCII boundaries (bytes >= 0x80 count as
/// alphanumeric so UTF-8 sequences stay whole), each token is lower-cased and
/// hashed with FNV-1a into bucket `hash % dimension`, bucket counts are
/// accumulated and the vector is L2-normalised. Text without any token maps
/// to the zero vector.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);

  std::string id() const override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  EmbeddingVector embed_one(std::string_view text) const;
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

}  // namespace revopt
