// SPDX-License-Identifier: Apache-2.0
#include "revopt/text.hpp"

namespace revopt {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(static_cast<unsigned char>(s[b]))) ++b;
  return rtrim(s.substr(b));
}

std::string_view rtrim(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(0, e);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::size_t word_count(std::string_view s) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> word_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
    terms.push_back(to_lower_ascii(text.substr(i, j - i)));
    i = j;
  }
  return terms;
}

std::vector<TokenSpan> WordPunctTokenizer::tokenize(std::string_view text) const {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_word(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
      spans.push_back({i, j - i});
      i = j;
    } else {
      spans.push_back({i, 1});
      ++i;
    }
  }
  return spans;
}

}  // namespace revopt
