// SPDX-License-Identifier: Apache-2.0
#include "revopt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

namespace revopt {

ScoreVector ScoreVector::from_values(std::span<const double> values) {
  ScoreVector v;
  for (std::size_t i = 0; i < values.size(); ++i) v.add(std::to_string(i), values[i]);
  return v;
}

void ScoreVector::validate() const {
  std::set<std::string_view> seen;
  for (const auto& [id, value] : entries) {
    if (!seen.insert(id).second) throw PreconditionError(fmt::format("duplicate item id {}", id));
    if (!std::isfinite(value)) throw PreconditionError(fmt::format("non-finite score for {}", id));
  }
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw PreconditionError(fmt::format("paired vectors differ in length ({} vs {})", x.size(),
                                        y.size()));
  }
}

std::unordered_map<std::string_view, double> index_by_id(const ScoreVector& v) {
  v.validate();
  std::unordered_map<std::string_view, double> out;
  for (const auto& [id, value] : v.entries) out.emplace(id, value);
  return out;
}

// Merge sort of `v` that returns the number of inversions (swaps).
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum over runs of equal adjacent values of t(t-1)/2.
template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq&& equal_to_prev) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

}  // namespace

PairedScores pair_exact(const ScoreVector& x, const ScoreVector& y) {
  const auto ys = index_by_id(y);
  x.validate();
  if (x.size() != y.size()) {
    throw PreconditionError(fmt::format("score vectors cover different items ({} vs {})", x.size(),
                                        y.size()));
  }
  PairedScores p;
  for (const auto& [id, value] : x.entries) {
    const auto it = ys.find(id);
    if (it == ys.end()) throw PreconditionError(fmt::format("item {} missing from second vector", id));
    p.ids.push_back(id);
    p.x.push_back(value);
    p.y.push_back(it->second);
  }
  return p;
}

PairedScores pair_intersection(const ScoreVector& x, const ScoreVector& y) {
  const auto ys = index_by_id(y);
  x.validate();
  PairedScores p;
  for (const auto& [id, value] : x.entries) {
    if (const auto it = ys.find(id); it != ys.end()) {
      p.ids.push_back(id);
      p.x.push_back(value);
      p.y.push_back(it->second);
    }
  }
  return p;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 2) throw UndefinedStatistic("pearson needs at least two pairs");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const ScoreVector& x, const ScoreVector& y) {
  const auto p = pair_exact(x, y);
  return pearson(p.x, p.y);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman(const ScoreVector& x, const ScoreVector& y) {
  const auto p = pair_exact(x, y);
  return spearman(p.x, p.y);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 2) throw UndefinedStatistic("kendall tau needs at least two pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t x_ties =
      tied_pairs(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const std::uint64_t joint_ties = tied_pairs(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> buf(n);
  const std::uint64_t swaps = count_inversions(ys, buf, 0, n);
  const std::uint64_t y_ties = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  const double denom_x = static_cast<double>(total - x_ties);
  const double denom_y = static_cast<double>(total - y_ties);
  if (denom_x == 0.0 || denom_y == 0.0) {
    throw UndefinedStatistic("kendall tau undefined: all pairs tied in one vector");
  }
  // concordant - discordant
  const double s = static_cast<double>(total) - static_cast<double>(x_ties) -
                   static_cast<double>(y_ties) + static_cast<double>(joint_ties) -
                   2.0 * static_cast<double>(swaps);
  return std::clamp(s / std::sqrt(denom_x * denom_y), -1.0, 1.0);
}

double kendall_tau(const ScoreVector& x, const ScoreVector& y) {
  const auto p = pair_exact(x, y);
  return kendall_tau(p.x, p.y);
}

LpDistances lp_distances(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  LpDistances d;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i] - y[i]);
    d.l1 += a;
    sq += a * a;
    d.linf = std::max(d.linf, a);
  }
  d.l2 = std::sqrt(sq);
  return d;
}

LpDistances lp_distances(const ScoreVector& x, const ScoreVector& y) {
  const auto p = pair_exact(x, y);
  return lp_distances(p.x, p.y);
}

void AgreementMatrix::validate() const {
  if (raters.size() < 2) throw PreconditionError("agreement needs at least two raters");
  if (cells.size() != items.size()) throw PreconditionError("agreement matrix row count mismatch");
  bool pairable = false;
  for (const auto& row : cells) {
    if (row.size() != raters.size()) {
      throw PreconditionError("agreement matrix rows must have one cell per rater");
    }
    std::size_t present = 0;
    for (const auto& c : row) {
      if (c) {
        if (!std::isfinite(*c)) throw PreconditionError("non-finite agreement cell");
        ++present;
      }
    }
    pairable = pairable || present >= 2;
  }
  if (!pairable) throw PreconditionError("agreement needs an item rated by at least two raters");
}

double krippendorff_alpha(const AgreementMatrix& m) {
  m.validate();
  // value -> index over the distinct pairable values
  std::map<double, std::size_t> value_index;
  for (const auto& row : m.cells) {
    if (std::count_if(row.begin(), row.end(), [](const auto& c) { return c.has_value(); }) < 2) {
      continue;
    }
    for (const auto& c : row) {
      if (c) value_index.emplace(*c, 0);
    }
  }
  std::vector<double> values;
  for (auto& [v, idx] : value_index) {
    idx = values.size();
    values.push_back(v);
  }
  const std::size_t k = values.size();
  std::vector<double> coincidence(k * k, 0.0);
  for (const auto& row : m.cells) {
    std::vector<std::size_t> counts(k, 0);
    std::size_t mu = 0;
    for (const auto& c : row) {
      if (c) ++mu;
    }
    if (mu < 2) continue;
    for (const auto& c : row) {
      if (c) ++counts[value_index.at(*c)];
    }
    for (std::size_t a = 0; a < k; ++a) {
      if (counts[a] == 0) continue;
      for (std::size_t b = 0; b < k; ++b) {
        const double pairs = a == b ? static_cast<double>(counts[a] * (counts[a] - 1))
                                    : static_cast<double>(counts[a] * counts[b]);
        coincidence[a * k + b] += pairs / static_cast<double>(mu - 1);
      }
    }
  }
  std::vector<double> marginal(k, 0.0);
  double n = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) marginal[a] += coincidence[a * k + b];
    n += marginal[a];
  }
  double observed = 0.0, expected = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const double delta = (values[a] - values[b]) * (values[a] - values[b]);
      observed += coincidence[a * k + b] * delta;
      expected += marginal[a] * marginal[b] * delta;
    }
  }
  observed /= n;
  expected /= n * (n - 1.0);
  if (expected == 0.0) {
    throw UndefinedStatistic("krippendorff alpha undefined: no expected disagreement");
  }
  return 1.0 - observed / expected;
}

double fleiss_kappa(const AgreementMatrix& m) {
  m.validate();
  const std::size_t raters = m.raters.size();
  std::vector<const std::vector<std::optional<double>>*> complete;
  for (const auto& row : m.cells) {
    if (std::all_of(row.begin(), row.end(), [](const auto& c) { return c.has_value(); })) {
      complete.push_back(&row);
    }
  }
  if (complete.empty()) throw PreconditionError("fleiss kappa needs an item rated by every rater");

  std::map<double, double> category_totals;
  double p_bar = 0.0;
  const double n = static_cast<double>(raters);
  for (const auto* row : complete) {
    std::map<double, double> counts;
    for (const auto& c : *row) counts[*c] += 1.0;
    double sum_sq = 0.0;
    for (const auto& [value, count] : counts) {
      sum_sq += count * count;
      category_totals[value] += count;
    }
    p_bar += (sum_sq - n) / (n * (n - 1.0));
  }
  const double items = static_cast<double>(complete.size());
  p_bar /= items;
  if (category_totals.size() < 2) {
    throw UndefinedStatistic("fleiss kappa undefined: a single category was used");
  }
  double p_e = 0.0;
  for (const auto& [value, total] : category_totals) {
    const double p = total / (items * n);
    p_e += p * p;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace revopt
