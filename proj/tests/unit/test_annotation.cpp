// SPDX-License-Identifier: Apache-2.0
#include <set>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "revopt/annotation.hpp"
#include "revopt/corpus_store.hpp"
#include "test_support.hpp"

namespace revopt {
namespace {

using nlohmann::json;

ReviewSet test_reviews() { return load_reviews(testing::fixture("reviews.jsonl")).subset(Split::test); }

std::vector<GeneratedResponse> responses(const ReviewSet& reviews, const std::string& prompt_id) {
  std::vector<GeneratedResponse> out;
  for (const auto& r : reviews.reviews) {
    GeneratedResponse g;
    g.review_id = r.id;
    g.prompt_id = prompt_id;
    g.text = "Reply to " + r.id + " number " + std::to_string(out.size());
    out.push_back(g);
  }
  return out;
}

std::vector<AnnotationTask> tasks() {
  const auto reviews = test_reviews();
  return build_tasks(reviews, responses(reviews, "base"), responses(reviews, "llm_optimized"));
}

ScoreSubmission all_four(const std::string& task_id, const std::string& rater, double raw = 4.0) {
  ScoreSubmission s{task_id, rater, {}};
  for (auto c : kAllCategories) s.scores.push_back({c, raw});
  return s;
}

TEST(Tasks, TwoPerReviewWithOpaqueIds) {
  const auto t = tasks();
  ASSERT_EQ(t.size(), 42u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].variant, i % 2 == 0 ? "base" : "optimized");
    EXPECT_EQ(t[i].task_id.size(), 16u);
    EXPECT_EQ(t[i].task_id.find_first_not_of("0123456789abcdef"), std::string::npos);
    ids.insert(t[i].task_id);
  }
  EXPECT_EQ(ids.size(), 42u);
  EXPECT_EQ(tasks(), t);
}

TEST(Tasks, BlindPayloadCarriesNoProvenance) {
  for (const auto& task : tasks()) {
    const auto payload = blind_json(task).dump();
    for (const auto& leak : {std::string("base"), std::string("optimized"), task.response_id, task.variant}) {
      EXPECT_EQ(payload.find(leak), std::string::npos) << leak;
    }
    EXPECT_NE(payload.find(task.task_id), std::string::npos);
    EXPECT_EQ(blind_json(task)["categories"].size(), 4u);
  }
}

TEST(Tasks, RaterOrderIsSeededPermutation) {
  const auto a = rater_order(42, "h1", 7);
  EXPECT_EQ(a, rater_order(42, "h1", 7));
  EXPECT_NE(a, rater_order(42, "h2", 7));
  EXPECT_NE(a, rater_order(42, "h1", 8));
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 42; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Submission, ParsesBothShapes) {
  const auto one = parse_submission(json::parse(R"({"task_id":"t","rater":"h1","category":"grammar","raw":4.5})"));
  ASSERT_EQ(one.scores.size(), 1u);
  EXPECT_EQ(one.scores[0].category, Category::grammar);
  const auto many = parse_submission(json::parse(
      R"({"task_id":"t","rater":"h1","scores":[{"category":"relevancy","raw":2},{"category":"accuracy","raw":3}]})"));
  EXPECT_EQ(many.scores.size(), 2u);
  EXPECT_THROW(parse_submission(json::parse(R"({"task_id":"t"})")), PreconditionError);
  EXPECT_THROW(parse_submission(json::parse(R"({"task_id":"t","rater":"h","category":"tone","raw":2})")),
               PreconditionError);
}

TEST(Store, SubmitValidatesBeforeWriting) {
  testing::TempDir dir;
  AnnotationStore store(dir.path(), tasks(), 1);
  const auto first = *store.next_for("h1");
  EXPECT_THROW(store.submit(all_four("nope", "h1")), NotFoundError);
  auto bad = all_four(first.task_id, "h1");
  bad.scores[3].raw = 5.5;
  EXPECT_THROW(store.submit(bad), PreconditionError);
  auto twice = all_four(first.task_id, "h1");
  twice.scores[1].category = Category::relevancy;
  EXPECT_THROW(store.submit(twice), PreconditionError);
  EXPECT_TRUE(store.rows().empty());

  store.submit({first.task_id, "h1", {{Category::relevancy, 3.04}}});
  EXPECT_EQ(store.completed("h1"), 0u);
  EXPECT_EQ(store.next_for("h1")->task_id, first.task_id);
  EXPECT_THROW(store.submit(all_four(first.task_id, "h1")), ConflictError);
  EXPECT_EQ(store.rows().size(), 1u);
  EXPECT_DOUBLE_EQ(store.rows()[0].raw, 3.0);
  store.submit({first.task_id, "h1", {{Category::accuracy, 2}, {Category::app_specificity, 2}, {Category::grammar, 5}}});
  EXPECT_EQ(store.completed("h1"), 1u);
  EXPECT_NE(store.next_for("h1")->task_id, first.task_id);
  store.submit(all_four(first.task_id, "h2"));
}

TEST(Store, ResumesAfterReopen) {
  testing::TempDir dir;
  std::string second;
  {
    AnnotationStore store(dir.path(), tasks(), 5);
    store.submit(all_four(store.next_for("h1")->task_id, "h1"));
    second = store.next_for("h1")->task_id;
  }
  const auto reopened = AnnotationStore::open(dir.path());
  EXPECT_EQ(reopened->completed("h1"), 1u);
  EXPECT_EQ(reopened->next_for("h1")->task_id, second);
  EXPECT_EQ(reopened->tasks(), tasks());
  auto other = tasks();
  other.pop_back();
  EXPECT_ANY_THROW(AnnotationStore(dir.path(), other, 5));
  EXPECT_THROW(AnnotationStore::open(dir / "missing"), NotFoundError);
}

TEST(Store, TornTrailingLineIsIgnored) {
  testing::TempDir dir;
  {
    AnnotationStore store(dir.path(), tasks(), 5);
    store.submit(all_four(store.next_for("h1")->task_id, "h1"));
  }
  testing::write_file(dir / "scores.jsonl", testing::read_file(dir / "scores.jsonl") + "{\"task_id\":\"ab");
  EXPECT_EQ(AnnotationStore::open(dir.path())->rows().size(), 4u);
}

TEST(Store, ExportRoundTripsThroughImporter) {
  testing::TempDir dir;
  AnnotationStore store(dir.path(), tasks(), 3);
  for (const std::string rater : {"h1", "h2"}) {
    while (auto next = store.next_for(rater)) store.submit(all_four(next->task_id, rater, rater == "h1" ? 4.5 : 2.0));
    EXPECT_EQ(store.completed(rater), 42u);
  }
  std::istringstream in(store.export_csv());
  const auto rows = parse_human_scores(in);
  EXPECT_EQ(rows.size(), 2u * 42u * 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.response_id.substr(r.response_id.find('/') + 1), r.review_id);
  }
  const auto csv = store.export_csv();
  EXPECT_EQ(csv.find("variant"), std::string::npos);
  const auto unblind = store.export_csv(true);
  EXPECT_EQ(unblind.substr(0, unblind.find('\n')), std::string(kHumanScoreHeader) + ",variant");
  std::istringstream in2(unblind);
  EXPECT_EQ(parse_human_scores(in2), rows);
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::write_file(dir_ / "static" / "index.html", "<html>rate</html>");
    store_ = std::make_unique<AnnotationStore>(dir_ / "study", tasks(), 11);
    server_ = std::make_unique<AnnotationServer>(*store_, dir_ / "static");
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->listen(); });
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  testing::TempDir dir_;
  std::unique_ptr<AnnotationStore> store_;
  std::unique_ptr<AnnotationServer> server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(ServerTest, ScoringFlow) {
  auto cli = client();
  auto next = cli.Get("/api/annotation/next?rater=h1");
  ASSERT_TRUE(next);
  ASSERT_EQ(next->status, 200);
  const auto body = json::parse(next->body);
  EXPECT_FALSE(body["done"].get<bool>());
  EXPECT_EQ(body["progress"]["total"], 42);
  EXPECT_EQ(next->body.find("optimized"), std::string::npos);
  EXPECT_EQ(next->body.find("base"), std::string::npos);
  const auto task_id = body["task"]["task_id"].get<std::string>();

  json submit{{"task_id", task_id}, {"rater", "h1"}, {"scores", json::array()}};
  for (const char* c : {"relevancy", "accuracy", "app_specificity", "grammar"}) {
    submit["scores"].push_back({{"category", c}, {"raw", 4}});
  }
  auto ok = cli.Post("/api/annotation/score", submit.dump(), "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body)["completed"], 1);
  EXPECT_EQ(cli.Post("/api/annotation/score", submit.dump(), "application/json")->status, 409);
  submit["task_id"] = "ffffffffffffffff";
  EXPECT_EQ(cli.Post("/api/annotation/score", submit.dump(), "application/json")->status, 404);
  submit["task_id"] = task_id;
  submit["rater"] = "h2";
  submit["scores"][0]["raw"] = 9;
  EXPECT_EQ(cli.Post("/api/annotation/score", submit.dump(), "application/json")->status, 400);
  EXPECT_EQ(cli.Post("/api/annotation/score", "{oops", "application/json")->status, 400);
  EXPECT_EQ(cli.Get("/api/annotation/next")->status, 400);

  auto csv = cli.Get("/api/annotation/export");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  EXPECT_NE(csv->get_header_value("Content-Type").find("text/csv"), std::string::npos);
  std::istringstream in(csv->body);
  EXPECT_EQ(parse_human_scores(in).size(), 4u);

  auto page = cli.Get("/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->body, "<html>rate</html>");
}

TEST_F(ServerTest, DoneWhenEverythingScored) {
  while (auto next = store_->next_for("h3")) store_->submit(all_four(next->task_id, "h3"));
  auto res = client().Get("/api/annotation/next?rater=h3");
  ASSERT_TRUE(res);
  const auto body = json::parse(res->body);
  EXPECT_TRUE(body["done"].get<bool>());
  EXPECT_EQ(body["progress"]["completed"], 42);
}

}  // namespace
}  // namespace revopt
