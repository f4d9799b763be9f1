// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "pipeline.hpp"
#include "revopt/optimizer.hpp"
#include "revopt/serialize.hpp"

namespace revopt {
namespace {

using testing::Pipeline;

Feedback feedback(std::string id, double overall_score, std::string suggestion = "") {
  Feedback f;
  f.review_id = std::move(id);
  f.overall = overall_score;
  f.suggestions = std::move(suggestion);
  return f;
}

std::vector<Feedback> spread(std::size_t n) {
  std::vector<Feedback> out;
  for (std::size_t i = 0; i < n; ++i) {
    // deliberately unsorted with ties
    out.push_back(feedback("r" + std::to_string(100 + i), static_cast<double>((i * 7) % 5) / 4.0, "fix " + std::to_string(i)));
  }
  return out;
}

TEST(ImprovementSizes, FloorPercentWithMinimumOne) {
  const std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> expected{
      {1, {1, 0}}, {5, {1, 0}}, {10, {3, 1}}, {28, {8, 2}}, {49, {14, 4}}};
  for (const auto& [n, sizes] : expected) EXPECT_EQ(improvement_sizes(n, 30, 10), sizes) << n;
  EXPECT_EQ(improvement_sizes(3, 100, 50), (std::pair<std::size_t, std::size_t>{3, 0}));
  EXPECT_EQ(improvement_sizes(0, 30, 10), (std::pair<std::size_t, std::size_t>{0, 0}));
}

TEST(IdentifyIr, LowestMatchFullSortAndSubsetsAreDisjoint) {
  OptimizerConfig c;
  c.seed = 99;
  for (std::size_t n : {1u, 5u, 10u, 28u, 49u}) {
    const auto fb = spread(n);
    const auto ir = identify_ir(fb, c, 0);
    auto sorted = fb;
    std::sort(sorted.begin(), sorted.end(), [](const Feedback& a, const Feedback& b) {
      return a.overall != b.overall ? a.overall < b.overall : a.review_id < b.review_id;
    });
    const auto [nl, nr] = improvement_sizes(n, 30, 10);
    ASSERT_EQ(ir.lowest_ids.size(), nl);
    ASSERT_EQ(ir.random_ids.size(), nr);
    for (std::size_t i = 0; i < nl; ++i) EXPECT_EQ(ir.lowest_ids[i], sorted[i].review_id);
    std::set<std::string> all(ir.lowest_ids.begin(), ir.lowest_ids.end());
    for (const auto& id : ir.random_ids) EXPECT_TRUE(all.insert(id).second) << id;
    EXPECT_EQ(ir.members.size(), nl + nr);
  }
}

TEST(IdentifyIr, SampleIsSeeded) {
  OptimizerConfig c;
  c.seed = 1;
  const auto fb = spread(49);
  EXPECT_EQ(identify_ir(fb, c, 2).random_ids, identify_ir(fb, c, 2).random_ids);
  bool differs = false;
  for (int it = 0; it < 5 && !differs; ++it) {
    differs = identify_ir(fb, c, it).random_ids != identify_ir(fb, c, it + 1).random_ids;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(identify_ir(std::vector<Feedback>{}, c, 0), PreconditionError);
}

TEST(ImprovementSet, AggregatesNonEmptySuggestions) {
  ImprovementSet s;
  s.members.push_back({"a", feedback("a", 0.25, "Be specific.")});
  s.members.push_back({"b", feedback("b", 0.5, "  ")});
  s.members.push_back({"c", feedback("c", 0.5, "Name the menu.")});
  EXPECT_EQ(s.aggregated_suggestions(),
            "Review a (overall 0.250):\nBe specific.\n\nReview c (overall 0.500):\nName the menu.");
}

TEST(OptimizerConfig, ValidatesAndRoundTrips) {
  OptimizerConfig c;
  c.seed = 5;
  c.max_iterations = 2;
  const auto back = OptimizerConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  c.threshold = 1.5;
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(PromptGen, ChildLineage) {
  Pipeline p("magic.jsonl");
  const auto cfg = PromptGenConfig::with_default_prompt(testing::kApp);
  const auto child = prompt_gen(*p.gateway, cfg, testing::base_template(), "be specific");
  EXPECT_EQ(child.id, "base-iter1");
  EXPECT_EQ(child.iteration, 1);
  EXPECT_EQ(child.parent_id, "base");
  EXPECT_NE(child.text.find("MAGIC"), std::string::npos);
  const auto grandchild = prompt_gen(*p.gateway, cfg, child, "again");
  EXPECT_EQ(grandchild.id, "base-iter2");
  EXPECT_EQ(grandchild.parent_id, "base-iter1");
  EXPECT_THROW(prompt_gen(*p.gateway, cfg, child, "  "), PreconditionError);
}

TEST(PromptGen, InvalidRewritesFailAfterTwoAttempts) {
  testing::TempDir dir;
  testing::write_file(dir / "s.jsonl",
                      R"({"order": 1, "contains": "Original Agent's Prompt", "response": "no slots here", "times": 2})"
                      "\n"
                      R"({"order": 2, "catch_all": true, "response": "Fixed {context} {question}"})");
  Pipeline p((dir / "s.jsonl").string());
  const auto cfg = PromptGenConfig::with_default_prompt(testing::kApp);
  EXPECT_THROW(prompt_gen(*p.gateway, cfg, testing::base_template(), "x"), PromptGenFailure);
  EXPECT_EQ(prompt_gen(*p.gateway, cfg, testing::base_template(), "x").text, "Fixed {context} {question}");
}

OptimizerConfig config(int max_iterations = 5) {
  OptimizerConfig c;
  c.seed = 42;
  c.max_iterations = max_iterations;
  c.workers = 4;
  return c;
}

TEST(Optimizer, MagicScenarioReachesThreshold) {
  Pipeline p("magic.jsonl");
  const auto result = p.optimizer(config()).optimize(testing::train_reviews(), testing::base_template());
  EXPECT_EQ(result.terminated_by, Termination::threshold);
  ASSERT_EQ(result.iterations.size(), 2u);
  EXPECT_DOUBLE_EQ(result.iterations[0].avg_overall, 0.25);
  EXPECT_DOUBLE_EQ(result.iterations[1].avg_overall, 1.0);
  EXPECT_EQ(result.iterations[1].pass_rate, 1.0);
  EXPECT_EQ(result.final_template.id, "base-iter1");
  EXPECT_EQ(result.best_template, result.final_template);
  EXPECT_EQ(result.best_avg, 1.0);
}

TEST(Optimizer, VerbatimRewriterHitsFixedPoint) {
  Pipeline p("verbatim.jsonl");
  const auto result = p.optimizer(config()).optimize(testing::train_reviews(), testing::base_template());
  EXPECT_EQ(result.terminated_by, Termination::fixed_point);
  EXPECT_EQ(result.iterations.size(), 2u);
  EXPECT_EQ(result.best_template.id, "base");
}

TEST(Optimizer, MaxIterationsOneWritesTwoRecords) {
  testing::TempDir dir;
  const RunStore store(dir.path());
  Pipeline p("stepwise.jsonl");
  const auto result = p.optimizer(config(1)).optimize(testing::train_reviews(), testing::base_template(), &store, "r1");
  EXPECT_EQ(result.terminated_by, Termination::max_iterations);
  const auto records = store.load_run("r1");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].iteration, 0);
  EXPECT_EQ(records[1].iteration, 1);
  EXPECT_DOUBLE_EQ(records[1].avg_overall, 0.5);
  EXPECT_EQ(records[1].prompt.parent_id, "base");
  EXPECT_FALSE(store.is_failed("r1"));
}

TEST(Optimizer, StepwiseThenFixedPoint) {
  Pipeline p("stepwise.jsonl");
  const auto result = p.optimizer(config(5)).optimize(testing::train_reviews(), testing::base_template());
  EXPECT_EQ(result.terminated_by, Termination::fixed_point);
  EXPECT_EQ(result.iterations.size(), 3u);
  EXPECT_EQ(result.best_template.id, "base-iter1");
  EXPECT_EQ(result.final_template.id, "base-iter2");
}

TEST(Optimizer, IdenticalRunsProduceIdenticalRecords) {
  testing::TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    const RunStore store(dir->path());
    Pipeline p("magic.jsonl");
    p.optimizer(config()).optimize(testing::train_reviews(), testing::base_template(), &store, "rep");
  }
  const auto ra = RunStore(a.path()).load_run("rep");
  const auto rb = RunStore(b.path()).load_run("rep");
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    auto ja = to_json(ra[i]);
    auto jb = to_json(rb[i]);
    ja.erase("wall_time");
    jb.erase("wall_time");
    EXPECT_EQ(ja.dump(), jb.dump());
  }
}

TEST(Optimizer, JudgeFailureMarksRunFailed) {
  testing::TempDir dir;
  testing::write_file(dir / "echo.jsonl", R"({"catch_all": true, "echo": true})");
  Pipeline p((dir / "echo.jsonl").string());
  const RunStore store(dir / "runs");
  EXPECT_THROW(p.optimizer(config()).optimize(testing::train_reviews(), testing::base_template(), &store, "bad"),
               JudgeFailure);
  EXPECT_TRUE(store.is_failed("bad"));
}

TEST(Optimizer, RequiresExpertResponses) {
  Pipeline p("magic.jsonl");
  auto reviews = testing::train_reviews();
  reviews.reviews[0].expert_response.reset();
  EXPECT_THROW(p.optimizer(config()).optimize(reviews, testing::base_template()), PreconditionError);
}

}  // namespace
}  // namespace revopt
