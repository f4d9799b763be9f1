// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "revopt/annotation.hpp"
#include "revopt/corpus_store.hpp"
#include "revopt/report.hpp"
#include "test_support.hpp"

namespace revopt {
namespace {

using nlohmann::json;
using testing::fixture;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "revopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const json config{{"app", {{"name", "Ledgerly"}, {"full_name", "Ledgerly Personal Finance"}}},
                      {"backend", {{"kind", "scripted"}, {"script", fixture("scripts/magic.jsonl").string()}}},
                      {"rag", {{"chunk_size", 60}}},
                      {"optimizer", {{"seed", 4}}},
                      {"paths", {{"runs", (dir_ / "runs").string()}}}};
    testing::write_file(config_path(), config.dump());
  }

  std::string config_path() const { return (dir_ / "config.json").string(); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result with_config(std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", config_path(), "-q"});
    return run(std::move(args));
  }

  testing::TempDir dir_;
};

TEST(Cli, UsageErrors) {
  auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"generate", "--index", "x", "--out", "y"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--reviews"), std::string::npos);
  r = run({"optimize", "--reviews", "a", "--index", "b", "--select", "worst"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST_F(CliTest, DomainErrorsExitOne) {
  auto r = with_config({"evaluate", "--llm", path("missing.jsonl"), "--human", fixture("human_scores.csv").string()});
  EXPECT_EQ(r.code, cli::kExitDomain);
  EXPECT_FALSE(r.err.empty());
  testing::write_file(dir_ / "bad.json", R"({"colour": 1})");
  r = run({"--config", path("bad.json"), "export", "--store", path("s")});
  EXPECT_EQ(r.code, cli::kExitDomain);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, IndexGenerateJudgeOptimize) {
  auto r = with_config({"index", "--docs", fixture("knowledge").string(), "--out", path("index.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("6 documents"), std::string::npos);

  const auto reviews = fixture("reviews.jsonl").string();
  r = with_config({"generate", "--reviews", reviews, "--index", path("index.json"), "--split", "test", "--out",
                   path("base.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("generated 21 responses"), std::string::npos);

  r = with_config({"judge", "--reviews", reviews, "--responses", path("base.jsonl"), "--out", path("judged.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto judged = load_judged(dir_ / "judged.jsonl");
  ASSERT_EQ(judged.size(), 21u);
  EXPECT_EQ(judged[0].response_id.rfind("base/", 0), 0u);
  EXPECT_DOUBLE_EQ(judged[0].feedback.overall, 0.25);

  r = with_config({"optimize", "--reviews", reviews, "--index", path("index.json"), "--run-id", "cli",
                   "--out", path("optimized.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = json::parse(r.out);
  EXPECT_EQ(summary["terminated_by"], "threshold");
  EXPECT_EQ(summary["iterations"], 2);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "runs" / "cli" / "iter_0.json"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "runs" / "cli" / "iter_1.json"));
  EXPECT_NE(testing::read_file(dir_ / "optimized.txt").find("MAGIC"), std::string::npos);

  r = with_config({"generate", "--reviews", reviews, "--index", path("index.json"), "--split", "test",
                   "--prompt", path("optimized.txt"), "--prompt-id", "llm_optimized", "--out", path("opt.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = with_config({"judge", "--reviews", reviews, "--responses", path("opt.jsonl"), "--out", path("judged_opt.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(load_judged(dir_ / "judged_opt.jsonl")[0].feedback.overall, 1.0);
}

TEST_F(CliTest, EvaluateWritesReport) {
  auto r = with_config({"evaluate", "--llm", fixture("llm_scores.jsonl").string(), "--human",
                        fixture("human_scores.csv").string(), "--out", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Overall"), std::string::npos);
  EXPECT_NE(r.out.find("Krippendorff alpha"), std::string::npos);
  const auto doc = json::parse(testing::read_file(dir_ / "report.json"));
  EXPECT_EQ(doc["rows"].size(), 5u);
  EXPECT_EQ(doc["agreement"].size(), 4u);
}

TEST_F(CliTest, ExportStudy) {
  const auto reviews = load_reviews(fixture("reviews.jsonl")).subset(Split::test);
  std::vector<GeneratedResponse> base, opt;
  for (const auto& rv : reviews.reviews) {
    base.push_back({rv.id, "base", "b " + rv.id, {}});
    opt.push_back({rv.id, "llm_optimized", "o " + rv.id, {}});
  }
  {
    AnnotationStore store(dir_ / "study", build_tasks(reviews, base, opt), 2);
    auto task = *store.next_for("h1");
    store.submit({task.task_id, "h1", {{Category::grammar, 4.0}}});
  }
  auto r = with_config({"export", "--store", path("study")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), kHumanScoreHeader);
  r = with_config({"export", "--store", path("study"), "--unblind", "--out", path("u.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(testing::read_file(dir_ / "u.csv").find(",variant"), std::string::npos);
}

}  // namespace
}  // namespace revopt
