// SPDX-License-Identifier: Apache-2.0
// Straight-from-the-definition reference implementations. Deliberately naive
// (quadratic or worse) and sharing no code with the library.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace revopt::oracle {

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// cov(x, y) / (sd(x) sd(y)); nullopt when either vector is constant.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  const double n1 = static_cast<double>(x.size() - 1);
  if (vx == 0 || vy == 0) return std::nullopt;
  return (cov / n1) / (std::sqrt(vx / n1) * std::sqrt(vy / n1));
}

/// Rank = 1 + (#smaller) + (#equal others) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) smaller += 1;
      if (j != i && v[j] == v[i]) equal += 1;
    }
    r[i] = 1 + smaller + equal / 2;
  }
  return r;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

/// tau-b = (C - D) / sqrt((C + D + Tx)(C + D + Ty)), Tx/Ty = pairs tied only in x/y.
inline std::optional<double> kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        tx += 1;
      } else if (dy == 0) {
        ty += 1;
      } else if ((dx > 0) == (dy > 0)) {
        c += 1;
      } else {
        d += 1;
      }
    }
  }
  const double den = (c + d + tx) * (c + d + ty);
  if (den == 0) return std::nullopt;
  return (c - d) / std::sqrt(den);
}

struct Lp {
  double l1, l2, linf;
};

inline Lp lp(const std::vector<double>& x, const std::vector<double>& y) {
  Lp out{0, 0, 0};
  double sq = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::fabs(x[i] - y[i]);
    out.l1 += d;
    sq += d * d;
    if (d > out.linf) out.linf = d;
  }
  out.l2 = std::sqrt(sq);
  return out;
}

using Matrix = std::vector<std::vector<std::optional<double>>>;

/// Pairable-value form: D_o averages within-unit squared differences
/// (weighted 1/(m_u - 1)), D_e averages over all pairs of pairable values.
inline std::optional<double> krippendorff_interval(const Matrix& m) {
  std::vector<std::vector<double>> units;
  for (const auto& row : m) {
    std::vector<double> vals;
    for (const auto& c : row) {
      if (c) vals.push_back(*c);
    }
    if (vals.size() >= 2) units.push_back(vals);
  }
  std::vector<double> all;
  for (const auto& u : units) all.insert(all.end(), u.begin(), u.end());
  const double n = static_cast<double>(all.size());
  double within = 0;
  for (const auto& u : units) {
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (i != j) s += (u[i] - u[j]) * (u[i] - u[j]);
      }
    }
    within += s / static_cast<double>(u.size() - 1);
  }
  double between = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (i != j) between += (all[i] - all[j]) * (all[i] - all[j]);
    }
  }
  const double d_o = within / n;
  const double d_e = between / (n * (n - 1));
  if (d_e == 0) return std::nullopt;
  return 1 - d_o / d_e;
}

/// Fleiss' kappa over complete rows; categories are the observed values.
inline std::optional<double> fleiss(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : m) {
    std::vector<double> vals;
    for (const auto& c : row) {
      if (c) vals.push_back(*c);
    }
    if (vals.size() == row.size()) rows.push_back(vals);
  }
  std::set<double> cats;
  for (const auto& r : rows) cats.insert(r.begin(), r.end());
  if (rows.empty() || cats.size() < 2) return std::nullopt;
  const double n = static_cast<double>(rows.front().size());
  const double items = static_cast<double>(rows.size());
  double p_bar = 0;
  for (const auto& r : rows) {
    double agree = 0;
    for (double c : cats) {
      const double nij = static_cast<double>(std::count(r.begin(), r.end(), c));
      agree += nij * (nij - 1);
    }
    p_bar += agree / (n * (n - 1));
  }
  p_bar /= items;
  double p_e = 0;
  for (double c : cats) {
    double total = 0;
    for (const auto& r : rows) total += static_cast<double>(std::count(r.begin(), r.end(), c));
    const double pj = total / (items * n);
    p_e += pj * pj;
  }
  return (p_bar - p_e) / (1 - p_e);
}

/// Lower-cased maximal runs of [A-Za-z0-9] or bytes >= 0x80.
inline std::vector<std::string> terms(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(c >= 0x80 ? c : std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)), unique query terms.
inline std::vector<double> bm25(const std::vector<std::string>& docs, const std::string& query,
                                double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(terms(d));
    total += static_cast<double>(toks.back().size());
  }
  const double avg = total / static_cast<double>(docs.size());
  const auto q = terms(query);
  const std::set<std::string> uq(q.begin(), q.end());
  std::vector<double> scores(docs.size(), 0.0);
  for (const auto& t : uq) {
    double df = 0;
    for (const auto& d : toks) df += std::count(d.begin(), d.end(), t) > 0 ? 1 : 0;
    const double idf = std::log(1 + (static_cast<double>(docs.size()) - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), t));
      if (tf == 0) continue;
      const double len = avg > 0 ? static_cast<double>(toks[i].size()) / avg : 1.0;
      scores[i] += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len));
    }
  }
  return scores;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// 1-based rank of each item by descending score; ties by the given order key.
inline std::vector<std::size_t> rank_desc(const std::vector<double>& scores,
                                          const std::vector<std::pair<std::string, std::size_t>>& keys) {
  std::vector<std::size_t> r(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && keys[j] < keys[i])) ++ahead;
    }
    r[i] = ahead + 1;
  }
  return r;
}

}  // namespace revopt::oracle
