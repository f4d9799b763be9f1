// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revopt/category.hpp"

namespace revopt {

enum class Split { unassigned, train, test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view token);

struct Review {
  std::string id;
  std::string text;
  std::optional<std::string> expert_response;
  Split split = Split::unassigned;
  std::optional<std::string> source;

  bool operator==(const Review&) const = default;
};

struct ReviewSet {
  std::string name;
  std::vector<Review> reviews;

  std::size_t size() const { return reviews.size(); }
  bool empty() const { return reviews.empty(); }
  std::size_t count(Split s) const;
  /// Reviews tagged with `s`, in set order.
  ReviewSet subset(Split s) const;
  const Review* find(std::string_view id) const;

  bool operator==(const ReviewSet&) const = default;
};

struct HumanScoreRow {
  std::string rater_id;
  std::string review_id;
  std::string response_id;
  Category category = Category::relevancy;
  double raw = 1.0;

  bool operator==(const HumanScoreRow&) const = default;
};

}  // namespace revopt
