// SPDX-License-Identifier: Apache-2.0
#include "revopt/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "revopt/corpus_store.hpp"
#include "revopt/embedder.hpp"
#include "revopt/log.hpp"

namespace revopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json task_to_json(const AnnotationTask& t) {
  return {{"task_id", t.task_id},         {"review_text", t.review_text},
          {"response_text", t.response_text}, {"review_id", t.review_id},
          {"response_id", t.response_id}, {"variant", t.variant}};
}

AnnotationTask task_from_json(const json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.review_text = j.at("review_text").get<std::string>();
  t.response_text = j.at("response_text").get<std::string>();
  t.review_id = j.at("review_id").get<std::string>();
  t.response_id = j.at("response_id").get<std::string>();
  t.variant = j.at("variant").get<std::string>();
  return t;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

json blind_json(const AnnotationTask& task) {
  json categories = json::array();
  for (Category c : kAllCategories) {
    categories.push_back({{"id", to_string(c)}, {"label", display_name(c)}});
  }
  return {{"task_id", task.task_id},
          {"review_text", task.review_text},
          {"response_text", task.response_text},
          {"categories", categories}};
}

std::vector<AnnotationTask> build_tasks(const ReviewSet& reviews,
                                        const std::vector<GeneratedResponse>& base,
                                        const std::vector<GeneratedResponse>& optimized) {
  auto by_review = [](const std::vector<GeneratedResponse>& v) {
    std::map<std::string, const GeneratedResponse*> m;
    for (const auto& g : v) {
      if (!m.emplace(g.review_id, &g).second) {
        throw PreconditionError(fmt::format("two responses for review {}", g.review_id));
      }
    }
    return m;
  };
  const auto b = by_review(base);
  const auto o = by_review(optimized);
  std::vector<AnnotationTask> tasks;
  std::set<std::string> ids;
  for (const auto& review : reviews.reviews) {
    const auto bi = b.find(review.id);
    const auto oi = o.find(review.id);
    if (bi == b.end() || oi == o.end()) {
      logger()->warn("review {} lacks a base or optimized response; skipped", review.id);
      continue;
    }
    for (const auto& [variant, g] : {std::pair{"base", bi->second}, std::pair{"optimized", oi->second}}) {
      AnnotationTask t;
      t.task_id = fmt::format("{:016x}", fnv1a64("task:" + g->response_id()));
      t.review_text = review.text;
      t.response_text = g->text;
      t.review_id = review.id;
      t.response_id = g->response_id();
      t.variant = variant;
      if (!ids.insert(t.task_id).second) {
        throw PreconditionError(fmt::format("duplicate response {}", t.response_id));
      }
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

std::vector<std::size_t> rater_order(std::size_t task_count, const std::string& rater,
                                     std::uint64_t seed) {
  std::vector<std::size_t> order(task_count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ fnv1a64(rater));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ScoreSubmission parse_submission(const json& body) {
  try {
    ScoreSubmission s;
    s.task_id = body.at("task_id").get<std::string>();
    s.rater = body.at("rater").get<std::string>();
    auto entry = [](const json& j) {
      const auto token = j.at("category").get<std::string>();
      const auto c = parse_category(token);
      if (!c) throw PreconditionError(fmt::format("unknown category {}", token));
      return ScoreEntry{*c, j.at("raw").get<double>()};
    };
    if (body.contains("scores")) {
      for (const auto& j : body.at("scores")) s.scores.push_back(entry(j));
    } else {
      s.scores.push_back(entry(body));
    }
    return s;
  } catch (const json::exception& e) {
    throw PreconditionError(fmt::format("malformed submission: {}", e.what()));
  }
}

AnnotationStore::AnnotationStore(fs::path dir, std::vector<AnnotationTask> tasks, std::uint64_t seed)
    : dir_(std::move(dir)), tasks_(std::move(tasks)), seed_(seed) {
  fs::create_directories(dir_);
  const fs::path tasks_path = dir_ / "tasks.json";
  if (fs::exists(tasks_path)) {
    const auto [stored, stored_seed] = read_study(dir_);
    if (stored != tasks_ || stored_seed != seed_) {
      throw ConsistencyError(fmt::format("{} holds a different study", dir_.string()));
    }
  } else {
    json doc{{"seed", seed_}, {"tasks", json::array()}};
    for (const auto& t : tasks_) doc["tasks"].push_back(task_to_json(t));
    write_atomically(tasks_path, doc.dump(2) + "\n");
  }
  load_scores();
}

std::pair<std::vector<AnnotationTask>, std::uint64_t> AnnotationStore::read_study(const fs::path& dir) {
  std::ifstream in(dir / "tasks.json", std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("no annotation study in {}", dir.string()));
  std::vector<AnnotationTask> tasks;
  std::uint64_t seed = 0;
  try {
    const json doc = json::parse(in);
    seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& t : doc.at("tasks")) tasks.push_back(task_from_json(t));
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", (dir / "tasks.json").string(), e.what()));
  }
  return {std::move(tasks), seed};
}

std::unique_ptr<AnnotationStore> AnnotationStore::open(const fs::path& dir) {
  auto [tasks, seed] = read_study(dir);
  return std::make_unique<AnnotationStore>(dir, std::move(tasks), seed);
}

void AnnotationStore::load_scores() {
  scores_.clear();
  std::ifstream in(dir_ / "scores.jsonl", std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Stored s;
      s.task_id = j.at("task_id").get<std::string>();
      s.row.rater_id = j.at("rater_id").get<std::string>();
      s.row.category = parse_category(j.at("category").get<std::string>()).value();
      s.row.raw = j.at("raw").get<double>();
      const AnnotationTask* t = find(s.task_id);
      if (!t) throw NotFoundError("unknown task " + s.task_id);
      s.row.review_id = t->review_id;
      s.row.response_id = t->response_id;
      scores_.push_back(std::move(s));
    } catch (const std::exception& e) {
      // an interrupted append leaves at most one torn final line
      logger()->warn("scores.jsonl:{}: ignored ({})", lineno, e.what());
    }
  }
}

const AnnotationTask* AnnotationStore::find(const std::string& task_id) const {
  for (const auto& t : tasks_) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

std::size_t AnnotationStore::completed(const std::string& rater) const {
  std::lock_guard lock(mutex_);
  std::map<std::string, int> per_task;
  for (const auto& s : scores_) {
    if (s.row.rater_id == rater) ++per_task[s.task_id];
  }
  return static_cast<std::size_t>(std::count_if(per_task.begin(), per_task.end(),
                                                [](const auto& p) { return p.second == 4; }));
}

std::optional<AnnotationTask> AnnotationStore::next_for(const std::string& rater) const {
  std::lock_guard lock(mutex_);
  std::map<std::string, int> per_task;
  for (const auto& s : scores_) {
    if (s.row.rater_id == rater) ++per_task[s.task_id];
  }
  for (std::size_t i : rater_order(tasks_.size(), rater, seed_)) {
    const auto it = per_task.find(tasks_[i].task_id);
    if (it == per_task.end() || it->second < 4) return tasks_[i];
  }
  return std::nullopt;
}

void AnnotationStore::submit(const ScoreSubmission& submission) {
  if (submission.rater.empty()) throw PreconditionError("rater id is required");
  if (submission.scores.empty()) throw PreconditionError("no scores submitted");
  const AnnotationTask* task = find(submission.task_id);
  if (!task) throw NotFoundError(fmt::format("unknown task {}", submission.task_id));
  std::set<Category> seen;
  for (const auto& e : submission.scores) {
    if (!(e.raw >= 1.0 && e.raw <= 5.0)) {
      throw PreconditionError(fmt::format("{} score {} outside [1.0, 5.0]", to_string(e.category), e.raw));
    }
    if (!seen.insert(e.category).second) {
      throw PreconditionError(fmt::format("{} submitted twice", to_string(e.category)));
    }
  }

  std::lock_guard lock(mutex_);
  for (const auto& s : scores_) {
    if (s.task_id == task->task_id && s.row.rater_id == submission.rater &&
        seen.count(s.row.category) > 0) {
      throw ConflictError(fmt::format("rater {} already scored {} on {}", submission.rater,
                                      task->task_id, to_string(s.row.category)));
    }
  }
  std::ofstream out(dir_ / "scores.jsonl", std::ios::binary | std::ios::app);
  if (!out) throw Error(fmt::format("cannot append to {}", (dir_ / "scores.jsonl").string()));
  for (const auto& e : submission.scores) {
    Stored s;
    s.task_id = task->task_id;
    s.row.rater_id = submission.rater;
    s.row.review_id = task->review_id;
    s.row.response_id = task->response_id;
    s.row.category = e.category;
    s.row.raw = std::round(e.raw * 10.0) / 10.0;
    out << json{{"task_id", s.task_id},
                {"rater_id", s.row.rater_id},
                {"category", to_string(s.row.category)},
                {"raw", s.row.raw}}
               .dump()
        << '\n';
    scores_.push_back(std::move(s));
  }
  out.flush();
  if (!out) throw Error("failed to persist scores");
}

std::vector<HumanScoreRow> AnnotationStore::rows() const {
  std::lock_guard lock(mutex_);
  std::vector<HumanScoreRow> out;
  for (const auto& s : scores_) out.push_back(s.row);
  return out;
}

std::string AnnotationStore::export_csv(bool unblind) const {
  std::ostringstream out;
  const auto all = rows();
  if (!unblind) {
    write_human_scores(all, out);
    return out.str();
  }
  std::map<std::string, std::string> variant;
  for (const auto& t : tasks_) variant[t.response_id] = t.variant;
  out << kHumanScoreHeader << ",variant\n";
  for (const auto& r : all) {
    out << csv_escape(r.rater_id) << ',' << csv_escape(r.review_id) << ','
        << csv_escape(r.response_id) << ',' << to_string(r.category) << ','
        << fmt::format("{:.1f}", r.raw) << ',' << variant.at(r.response_id) << '\n';
  }
  return out.str();
}

struct AnnotationServer::Impl {
  explicit Impl(AnnotationStore& s) : store(s) {}
  AnnotationStore& store;
  httplib::Server server;
};

AnnotationServer::AnnotationServer(AnnotationStore& store, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  auto send_json = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto send_error = [send_json](httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
  };

  srv.Get("/api/annotation/next", [this, send_json, send_error](const httplib::Request& req,
                                                                 httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return send_error(res, 400, "rater is required");
    auto& store = impl_->store;
    const json progress{{"completed", store.completed(rater)}, {"total", store.task_count()}};
    if (auto task = store.next_for(rater)) {
      send_json(res, 200, json{{"done", false}, {"task", blind_json(*task)}, {"progress", progress}});
    } else {
      send_json(res, 200, json{{"done", true}, {"progress", progress}});
    }
  });

  srv.Post("/api/annotation/score", [this, send_json, send_error](const httplib::Request& req,
                                                                   httplib::Response& res) {
    try {
      const auto body = json::parse(req.body);
      const auto submission = parse_submission(body);
      impl_->store.submit(submission);
      send_json(res, 200, json{{"ok", true}, {"completed", impl_->store.completed(submission.rater)}});
    } catch (const json::parse_error& e) {
      send_error(res, 400, fmt::format("invalid JSON: {}", e.what()));
    } catch (const ConflictError& e) {
      send_error(res, 409, e.what());
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const PreconditionError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Get("/api/annotation/export", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(impl_->store.export_csv(false), "text/csv");
  });

  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      throw NotFoundError(fmt::format("static directory {} not found", static_dir->string()));
    }
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace revopt
