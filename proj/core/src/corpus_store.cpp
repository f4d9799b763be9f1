// SPDX-License-Identifier: Apache-2.0
#include "revopt/corpus_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "revopt/log.hpp"
#include "revopt/serialize.hpp"
#include "revopt/text.hpp"

namespace revopt {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t ReviewSet::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(reviews.begin(), reviews.end(), [s](const Review& r) { return r.split == s; }));
}

ReviewSet ReviewSet::subset(Split s) const {
  ReviewSet out{fmt::format("{}:{}", name, to_string(s)), {}};
  for (const auto& r : reviews) {
    if (r.split == s) out.reviews.push_back(r);
  }
  return out;
}

const Review* ReviewSet::find(std::string_view id) const {
  for (const auto& r : reviews) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

ReviewSet parse_reviews(std::istream& in, std::string name) {
  ReviewSet set{std::move(name), {}};
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Review r;
    try {
      r = json::parse(line).get<Review>();
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("{}:{}: malformed review record: {}", set.name, line_no,
                                    e.what()));
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("{}:{}: {}", set.name, line_no, e.what()));
    }
    if (r.id.empty()) throw FormatError(fmt::format("{}:{}: empty review id", set.name, line_no));
    if (trim(r.text).empty()) {
      throw FormatError(fmt::format("{}:{}: review {} has empty text", set.name, line_no, r.id));
    }
    if (!ids.insert(r.id).second) {
      throw FormatError(fmt::format("{}:{}: duplicate review id \"{}\"", set.name, line_no, r.id));
    }
    set.reviews.push_back(std::move(r));
  }
  if (set.empty()) logger()->warn("review set {} is empty", set.name);
  return set;
}

ReviewSet load_reviews(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("reviews file not found: {}", path.string()));
  return parse_reviews(in, path.string());
}

void write_reviews(const ReviewSet& set, std::ostream& out) {
  for (const auto& r : set.reviews) out << json(r).dump() << '\n';
}

void write_reviews(const ReviewSet& set, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  write_reviews(set, out);
}

ReviewSet split_dataset(const ReviewSet& set, std::size_t train_count, std::uint64_t seed) {
  if (train_count > set.size()) {
    throw PreconditionError(fmt::format("train_count {} exceeds review count {}", train_count,
                                        set.size()));
  }
  std::vector<std::size_t> indices(set.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<std::size_t> chosen;
  std::mt19937_64 rng(seed);
  std::sample(indices.begin(), indices.end(), std::back_inserter(chosen), train_count, rng);
  ReviewSet out = set;
  for (auto& r : out.reviews) r.split = Split::test;
  for (auto i : chosen) out.reviews[i].split = Split::train;
  return out;
}

namespace {

// RFC 4180 style: commas separate, double quotes enclose, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<HumanScoreRow> parse_human_scores(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(fmt::format("{}: missing CSV header", name));
  const auto header = split_csv_line(std::string(trim(line)));
  const std::vector<std::string> expected{"rater_id", "review_id", "response_id", "category", "raw"};
  if (header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), header.begin())) {
    throw FormatError(fmt::format("{}: header must start with {}", name, kHumanScoreHeader));
  }
  std::vector<HumanScoreRow> rows;
  std::set<std::tuple<std::string, std::string, Category>> keys;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 5) {
      throw FormatError(fmt::format("{}:{}: expected 5 fields, got {}", name, line_no, f.size()));
    }
    HumanScoreRow row;
    row.rater_id = std::string(trim(f[0]));
    row.review_id = std::string(trim(f[1]));
    row.response_id = std::string(trim(f[2]));
    const auto token = std::string(trim(f[3]));
    const auto category = parse_category(token);
    if (!category) {
      throw FormatError(fmt::format("{}:{}: unknown category \"{}\"", name, line_no, token));
    }
    row.category = *category;
    double raw = 0.0;
    try {
      std::size_t used = 0;
      const std::string value(trim(f[4]));
      raw = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw FormatError(fmt::format("{}:{}: raw score \"{}\" is not a number", name, line_no, f[4]));
    }
    if (!(raw >= 1.0 && raw <= 5.0)) {
      throw FormatError(fmt::format("{}:{}: raw score {} outside [1.0, 5.0]", name, line_no, raw));
    }
    row.raw = std::round(raw * 10.0) / 10.0;
    if (!keys.emplace(row.rater_id, row.response_id, row.category).second) {
      throw FormatError(fmt::format("{}:{}: duplicate score for rater {} response {} category {}",
                                    name, line_no, row.rater_id, row.response_id, token));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<HumanScoreRow> import_human_scores(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("human score file not found: {}", path.string()));
  return parse_human_scores(in, path.string());
}

void write_human_scores(const std::vector<HumanScoreRow>& rows, std::ostream& out) {
  out << kHumanScoreHeader << '\n';
  for (const auto& r : rows) {
    out << csv_escape(r.rater_id) << ',' << csv_escape(r.review_id) << ','
        << csv_escape(r.response_id) << ',' << to_string(r.category) << ','
        << fmt::format("{:.1f}", r.raw) << '\n';
  }
}

json to_json(const RunRecord& r) {
  return json{{"run_id", r.run_id},
              {"iteration", r.iteration},
              {"prompt", r.prompt},
              {"feedback", r.feedback},
              {"avg_overall", r.avg_overall},
              {"pass_rate", r.pass_rate},
              {"seed", r.seed},
              {"config_snapshot", r.config_snapshot},
              {"wall_time", r.wall_time}};
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.iteration = j.at("iteration").get<int>();
    r.prompt = j.at("prompt").get<PromptTemplate>();
    r.feedback = j.at("feedback").get<std::vector<Feedback>>();
    r.avg_overall = j.at("avg_overall").get<double>();
    r.pass_rate = j.value("pass_rate", 0.0);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_snapshot = j.value("config_snapshot", json::object());
    r.wall_time = j.value("wall_time", 0.0);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("malformed run record: {}", e.what()));
  }
  return r;
}

namespace {

const std::regex& iter_file_pattern() {
  static const std::regex re(R"(iter_(\d+)\.json)");
  return re;
}

std::map<int, fs::path> iteration_files(const fs::path& dir) {
  std::map<int, fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, iter_file_pattern())) files[std::stoi(m[1].str())] = entry.path();
  }
  return files;
}

void check_run_id(const std::string& run_id) {
  if (run_id.empty() || run_id.find_first_of("/\\") != std::string::npos || run_id == "." ||
      run_id == "..") {
    throw PreconditionError(fmt::format("invalid run id \"{}\"", run_id));
  }
}

}  // namespace

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::run_dir(const std::string& run_id) const {
  check_run_id(run_id);
  return root_ / run_id;
}

fs::path RunStore::record_run(const RunRecord& record) const {
  if (record.iteration < 0) throw PreconditionError("run record iteration must be >= 0");
  double sum = 0.0;
  for (const auto& f : record.feedback) sum += f.overall;
  if (!record.feedback.empty() &&
      std::abs(sum / record.feedback.size() - record.avg_overall) > 1e-12) {
    throw PreconditionError(fmt::format("run {} iteration {}: avg_overall disagrees with feedback",
                                        record.run_id, record.iteration));
  }
  const auto dir = run_dir(record.run_id);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(fmt::format("run store unavailable at {}: {}", dir.string(), ec.message()));
  const auto existing = iteration_files(dir);
  if (!existing.empty() && existing.rbegin()->first >= record.iteration) {
    throw PreconditionError(fmt::format("run {}: iteration {} is not after recorded iteration {}",
                                        record.run_id, record.iteration,
                                        existing.rbegin()->first));
  }
  const auto path = dir / fmt::format("iter_{}.json", record.iteration);
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("run store unavailable: cannot write {}", tmp.string()));
    out << to_json(record).dump(2) << '\n';
    if (!out.flush()) throw Error(fmt::format("run store write failed: {}", tmp.string()));
  }
  fs::rename(tmp, path);
  return path;
}

std::vector<RunRecord> RunStore::load_run(const std::string& run_id) const {
  const auto dir = run_dir(run_id);
  const auto files = iteration_files(dir);
  if (files.empty()) throw NotFoundError(fmt::format("unknown run id \"{}\"", run_id));
  std::vector<RunRecord> out;
  for (const auto& [iteration, path] : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot read {}", path.string()));
    try {
      out.push_back(run_record_from_json(json::parse(in)));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

void RunStore::mark_failed(const std::string& run_id, const std::string& reason) const {
  const auto dir = run_dir(run_id);
  fs::create_directories(dir);
  std::ofstream out(dir / "failed", std::ios::binary | std::ios::trunc);
  out << reason << '\n';
}

bool RunStore::is_failed(const std::string& run_id) const {
  return fs::exists(run_dir(run_id) / "failed");
}

}  // namespace revopt
