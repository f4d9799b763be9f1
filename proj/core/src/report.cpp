// SPDX-License-Identifier: Apache-2.0
#include "revopt/report.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "revopt/serialize.hpp"

namespace revopt {

nlohmann::json to_json(const JudgedResponse& r) {
  nlohmann::json j = r.feedback;
  j["response_id"] = r.response_id;
  return j;
}

JudgedResponse judged_response_from_json(const nlohmann::json& j) {
  JudgedResponse r;
  r.feedback = j.get<Feedback>();
  r.response_id = j.value("response_id", r.feedback.review_id);
  return r;
}

std::vector<JudgedResponse> load_judged(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(fmt::format("cannot open judged responses {}", path.string()));
  std::vector<JudgedResponse> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(judged_response_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

void write_judged(const std::vector<JudgedResponse>& rows, std::ostream& out) {
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

JudgeScores llm_scores(const std::vector<JudgedResponse>& judged, const CategoryWeights& weights) {
  JudgeScores s;
  for (const auto& r : judged) {
    std::array<double, 4> normalized{};
    for (Category c : kAllCategories) {
      normalized[index_of(c)] = r.feedback.score(c).normalized;
      s.categories[index_of(c)].add(r.response_id, r.feedback.score(c).normalized);
    }
    s.overall.add(r.response_id, overall(normalized, weights));
  }
  return s;
}

JudgeScores human_scores(const std::vector<HumanScoreRow>& rows) {
  // response -> per-category (sum, count), in first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::array<std::pair<double, int>, 4>> acc;
  for (const auto& row : rows) {
    auto [it, inserted] = acc.try_emplace(row.response_id);
    if (inserted) order.push_back(row.response_id);
    auto& cell = it->second[index_of(row.category)];
    cell.first += row.raw;
    cell.second += 1;
  }
  JudgeScores s;
  for (const auto& id : order) {
    const auto& cells = acc.at(id);
    bool complete = true;
    double sum = 0.0;
    for (Category c : kAllCategories) {
      const auto& [total, count] = cells[index_of(c)];
      if (count == 0) {
        complete = false;
        continue;
      }
      const double value = normalize(total / count);
      s.categories[index_of(c)].add(id, value);
      sum += value;
    }
    if (complete) s.overall.add(id, sum / 4.0);
  }
  return s;
}

namespace {

template <class F>
std::optional<double> defined(F&& f) {
  try {
    return f();
  } catch (const UndefinedStatistic&) {
    return std::nullopt;
  }
}

ComparisonRow compare_row(std::string label, const ScoreVector& llm, const ScoreVector& human) {
  const auto p = pair_intersection(llm, human);
  if (p.ids.empty()) throw PreconditionError(fmt::format("no overlapping items for {}", label));
  ComparisonRow row;
  row.label = std::move(label);
  row.n = p.ids.size();
  row.kendall_tau = defined([&] { return kendall_tau(p.x, p.y); });
  row.pearson = defined([&] { return pearson(p.x, p.y); });
  row.spearman = defined([&] { return spearman(p.x, p.y); });
  const auto d = lp_distances(p.x, p.y);
  row.l1 = d.l1;
  row.l2 = d.l2;
  row.linf = d.linf;
  return row;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("X");
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "X"; }

std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : body) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", r[c], width[c]);
      } else {
        out += fmt::format("  {:>{}}", r[c], width[c]);
      }
    }
    out += '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
  for (const auto& r : body) line(r);
  return out;
}

}  // namespace

ComparisonReport compare_judges(const JudgeScores& llm, const JudgeScores& human) {
  ComparisonReport report;
  for (Category c : kAllCategories) {
    report.rows.push_back(compare_row(std::string(display_name(c)), llm.categories[index_of(c)],
                                      human.categories[index_of(c)]));
  }
  report.rows.push_back(compare_row("Overall", llm.overall, human.overall));
  report.metadata = {
      {"lp_form", "sum"},
      {"kendall_variant", "tau-b"},
      {"llm_overall", "weighted mean of normalized category scores"},
      {"human_overall", "unweighted mean of normalized category scores"},
      {"scale", "normalized [0,1]"},
  };
  return report;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"label", r.label},
                         {"n", r.n},
                         {"kendall_tau", optional_json(r.kendall_tau)},
                         {"pearson", optional_json(r.pearson)},
                         {"spearman", optional_json(r.spearman)},
                         {"l1", r.l1},
                         {"l2", r.l2},
                         {"linf", r.linf}});
  }
  return {{"rows", rows_json}, {"metadata", metadata}};
}

std::string ComparisonReport::render_table() const {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({r.label, cell(r.kendall_tau), cell(r.pearson), cell(r.spearman),
                    fmt::format("{:.3f}", r.l1), fmt::format("{:.3f}", r.l2),
                    fmt::format("{:.3f}", r.linf)});
  }
  return render({"Category", "Kendall tau", "Pearson", "Spearman", "l1", "l2", "linf"}, body);
}

AgreementMatrix agreement_matrix(const std::vector<HumanScoreRow>& rows, Category category) {
  AgreementMatrix m;
  std::map<std::string, std::size_t> item_index, rater_index;
  for (const auto& row : rows) {
    if (row.category != category) continue;
    if (item_index.try_emplace(row.response_id, m.items.size()).second) {
      m.items.push_back(row.response_id);
    }
    if (rater_index.try_emplace(row.rater_id, m.raters.size()).second) {
      m.raters.push_back(row.rater_id);
    }
  }
  m.cells.assign(m.items.size(), std::vector<std::optional<double>>(m.raters.size()));
  for (const auto& row : rows) {
    if (row.category != category) continue;
    auto& c = m.cells[item_index.at(row.response_id)][rater_index.at(row.rater_id)];
    if (c) {
      throw ConsistencyError(fmt::format("rater {} scored {} {} twice", row.rater_id,
                                         row.response_id, to_string(category)));
    }
    c = row.raw;
  }
  return m;
}

std::vector<AgreementRow> human_agreement(const std::vector<HumanScoreRow>& rows) {
  std::vector<AgreementRow> out;
  for (Category c : kAllCategories) {
    AgreementRow a;
    a.category = c;
    const auto m = agreement_matrix(rows, c);
    a.items = m.items.size();
    std::vector<double> values;
    for (const auto& row : rows) {
      if (row.category == c) values.push_back(row.raw);
    }
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      a.mean = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
      }
    }
    try {
      a.krippendorff_alpha = defined([&] { return krippendorff_alpha(m); });
      a.fleiss_kappa = defined([&] { return fleiss_kappa(m); });
    } catch (const PreconditionError&) {
      // fewer than two raters or no shared items
    }
    out.push_back(a);
  }
  return out;
}

nlohmann::json to_json(const std::vector<AgreementRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"category", to_string(r.category)},
                   {"items", r.items},
                   {"krippendorff_alpha", optional_json(r.krippendorff_alpha)},
                   {"fleiss_kappa", optional_json(r.fleiss_kappa)},
                   {"mean", r.mean},
                   {"std", r.stddev}});
  }
  return out;
}

std::string render_agreement_table(const std::vector<AgreementRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({std::string(display_name(r.category)), cell(r.krippendorff_alpha),
                    cell(r.fleiss_kappa), fmt::format("{:.2f} ± {:.2f}", r.mean, r.stddev)});
  }
  return render({"Category", "Krippendorff alpha", "Fleiss kappa", "Mean ± Std"}, body);
}

}  // namespace revopt
