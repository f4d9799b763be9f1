// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "revopt/text.hpp"

namespace revopt {
namespace {

std::vector<std::string> token_strings(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : WordPunctTokenizer{}.tokenize(text)) out.emplace_back(text.substr(s.offset, s.length));
  return out;
}

TEST(Trim, StripsAsciiWhitespace) {
  EXPECT_EQ(trim("  a b \n\t"), "a b");
  EXPECT_EQ(rtrim("  a \r\n"), "  a");
  EXPECT_EQ(trim(" \n "), "");
}

TEST(WordCount, CountsWhitespaceSeparatedRuns) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("one"), 1u);
  EXPECT_EQ(word_count("  one, two\nthree  "), 3u);
}

TEST(Tokenizer, SplitsWordsAndPunctuation) {
  EXPECT_EQ(token_strings("Don't crash!! v2.1"),
            (std::vector<std::string>{"Don", "'", "t", "crash", "!", "!", "v2", ".", "1"}));
}

TEST(Tokenizer, KeepsUtf8SequencesWhole) {
  EXPECT_EQ(token_strings("café — naïve"), (std::vector<std::string>{"café", "—", "naïve"}));
}

TEST(WordTerms, LowercasesAlphanumericRuns) {
  EXPECT_EQ(word_terms("Sync FAILED, again: 3x"), (std::vector<std::string>{"sync", "failed", "again", "3x"}));
  EXPECT_EQ(word_terms("Sync FAILED, again: 3x"), oracle::terms("Sync FAILED, again: 3x"));
}

}  // namespace
}  // namespace revopt
