// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "revopt/error.hpp"

namespace revopt {

/// A statistic is mathematically undefined for the input (constant vector,
/// zero expected disagreement, ...). Reports render these as "X".
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

/// Scores keyed by item id. Pairing between two vectors is by id.
struct ScoreVector {
  std::vector<std::pair<std::string, double>> entries;

  static ScoreVector from_values(std::span<const double> values);
  void add(std::string id, double value) { entries.emplace_back(std::move(id), value); }
  std::size_t size() const { return entries.size(); }
  /// Throws PreconditionError on duplicate ids or non-finite values.
  void validate() const;
};

struct PairedScores {
  std::vector<std::string> ids;
  std::vector<double> x;
  std::vector<double> y;
};

/// Aligns two vectors that must cover the same id set (order of `x`).
PairedScores pair_exact(const ScoreVector& x, const ScoreVector& y);
/// Aligns the ids present in both vectors (order of `x`).
PairedScores pair_intersection(const ScoreVector& x, const ScoreVector& y);

/// Sample Pearson correlation. Needs n >= 2 and both vectors non-constant.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(const ScoreVector& x, const ScoreVector& y);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);
double spearman(const ScoreVector& x, const ScoreVector& y);

/// Kendall tau-b (tie-corrected), O(n log n).
double kendall_tau(std::span<const double> x, std::span<const double> y);
double kendall_tau(const ScoreVector& x, const ScoreVector& y);

struct LpDistances {
  double l1 = 0.0;    ///< sum of |d_i|
  double l2 = 0.0;    ///< sqrt of sum of d_i^2
  double linf = 0.0;  ///< max |d_i|
};

/// Sum-form distances of paired differences (not averaged over n).
LpDistances lp_distances(std::span<const double> x, std::span<const double> y);
LpDistances lp_distances(const ScoreVector& x, const ScoreVector& y);

/// Items x raters table of raw scores; missing cells allowed.
struct AgreementMatrix {
  std::vector<std::string> items;
  std::vector<std::string> raters;
  std::vector<std::vector<std::optional<double>>> cells;  ///< [item][rater]

  /// Needs >= 2 raters, rectangular cells, and an item with >= 2 ratings.
  void validate() const;
};

/// Krippendorff's alpha with the interval metric (a - b)^2, computed from the
/// coincidence matrix. Items with fewer than two ratings are not pairable.
double krippendorff_alpha(const AgreementMatrix& m);

/// Fleiss' kappa over the items rated by every rater; categories are the
/// distinct observed scores.
double fleiss_kappa(const AgreementMatrix& m);

}  // namespace revopt
