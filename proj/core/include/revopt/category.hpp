// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace revopt {

/// The four judged aspects of a response. Closed set.
enum class Category { relevancy, accuracy, app_specificity, grammar };

inline constexpr std::array<Category, 4> kAllCategories{
    Category::relevancy, Category::accuracy, Category::app_specificity, Category::grammar};

constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

/// Lower-case snake-case token, as used in CSV files and JSON.
std::string_view to_string(Category c);

/// Human label used in report tables.
std::string_view display_name(Category c);

std::optional<Category> parse_category(std::string_view token);

}  // namespace revopt
