// SPDX-License-Identifier: Apache-2.0
#include "revopt/category.hpp"

#include "revopt/corpus.hpp"

namespace revopt {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::relevancy: return "relevancy";
    case Category::accuracy: return "accuracy";
    case Category::app_specificity: return "app_specificity";
    case Category::grammar: return "grammar";
  }
  return "unknown";
}

std::string_view display_name(Category c) {
  switch (c) {
    case Category::relevancy: return "Relevancy";
    case Category::accuracy: return "Accuracy";
    case Category::app_specificity: return "App Specificity";
    case Category::grammar: return "Grammatical Correctness";
  }
  return "Unknown";
}

std::optional<Category> parse_category(std::string_view token) {
  for (auto c : kAllCategories) {
    if (to_string(c) == token) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "unassigned";
    case Split::train: return "train";
    case Split::test: return "test";
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view token) {
  for (auto s : {Split::unassigned, Split::train, Split::test}) {
    if (to_string(s) == token) return s;
  }
  return std::nullopt;
}

}  // namespace revopt
