// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace revopt {

std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Whitespace-separated word count.
std::size_t word_count(std::string_view s);

/// Lower-cased maximal alphanumeric runs. Bytes >= 0x80 are treated as
/// alphanumeric so multi-byte UTF-8 characters never split a term.
std::vector<std::string> word_terms(std::string_view text);

/// Byte range of one token within its source text.
struct TokenSpan {
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const TokenSpan&) const = default;
};

/// Tokenizer used for size-based segmentation. Implementations must be
/// deterministic and must tokenize any substring spanning whole tokens into
/// exactly those tokens, so that chunks re-tokenize to their slice.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<TokenSpan> tokenize(std::string_view text) const = 0;
};

/// Splits on whitespace and punctuation: a token is either a maximal run of
/// alphanumeric bytes or a single punctuation byte; whitespace separates.
class WordPunctTokenizer final : public Tokenizer {
 public:
  std::vector<TokenSpan> tokenize(std::string_view text) const override;
};

}  // namespace revopt
