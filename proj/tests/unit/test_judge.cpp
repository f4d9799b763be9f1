// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "revopt/embedder.hpp"
#include "revopt/judge.hpp"
#include "revopt/scripted_backend.hpp"
#include "test_support.hpp"

namespace revopt {
namespace {

std::unique_ptr<Gateway> scripted(const std::string& rules) {
  auto g = std::make_unique<Gateway>(std::make_shared<ScriptedBackend>(ScriptedBackend::parse_rules(rules)),
                                     std::make_shared<HashingEmbedder>(16));
  g->set_sleeper([](auto) {});
  return g;
}

Review review() {
  Review r;
  r.id = "r1";
  r.text = "Sync is broken";
  r.expert_response = "Reconnect the bank in Settings > Accounts.";
  return r;
}

TEST(Normalize, MapsEndpointsAndMidpoint) {
  EXPECT_EQ(normalize(1.0), 0.0);
  EXPECT_EQ(normalize(3.0), 0.5);
  EXPECT_EQ(normalize(5.0), 1.0);
  EXPECT_EQ(denormalize(0.5), 3.0);
  EXPECT_THROW(normalize(0.9), PreconditionError);
  EXPECT_THROW(normalize(5.1), PreconditionError);
}

TEST(Overall, AccuracyCountsTwice) {
  // relevancy 1.0, accuracy 0.8, app specificity 0.6, grammar 1.0
  EXPECT_DOUBLE_EQ(overall(std::array<double, 4>{1.0, 0.8, 0.6, 1.0}), 0.84);
  EXPECT_DOUBLE_EQ(overall(std::array<double, 4>{1.0, 0.8, 0.6, 1.0}, kEqualWeights), 0.85);
  EXPECT_THROW(overall(std::array<double, 4>{1, 1, 1, 1}, CategoryWeights{1, 0, 1, 1}), PreconditionError);
}

TEST(Overall, SpanFormRequiresEveryCategoryOnce) {
  std::vector<CategoryScore> s{{Category::relevancy, 5, 1, ""}, {Category::accuracy, 5, 1, ""},
                               {Category::grammar, 5, 1, ""}};
  EXPECT_THROW(overall(s), PreconditionError);
  s.push_back({Category::grammar, 5, 1, ""});
  EXPECT_THROW(overall(s), PreconditionError);
}

TEST(ParseJudgment, FixtureSuite) {
  const auto cases = nlohmann::json::parse(testing::read_file(testing::fixture("judgments.json")));
  ASSERT_EQ(cases.size(), 12u);
  for (const auto& c : cases) {
    const auto text = c["text"].get<std::string>();
    const auto expect = c["expect"].get<std::string>();
    SCOPED_TRACE(c["name"].get<std::string>());
    if (expect == "ok") {
      const auto j = parse_judgment(text);
      EXPECT_EQ(j.raw, c["raw"].get<double>());
      EXPECT_EQ(j.overlong, c["overlong"].get<bool>());
    } else if (expect == "range_error") {
      EXPECT_THROW(parse_judgment(text), ScoreRangeError);
    } else {
      EXPECT_THROW(parse_judgment(text), JudgmentParseError);
    }
  }
}

TEST(ParseJudgment, JustificationIsTextBeforeMarker) {
  const auto j = parse_judgment("  Clear steps.\n\nTotal Score: 4.0\n");
  EXPECT_EQ(j.justification, "Clear steps.");
}

TEST(ParseJudgment, ErrorCarriesText) {
  try {
    parse_judgment("nothing here");
    FAIL();
  } catch (const JudgmentError& e) {
    EXPECT_EQ(e.text(), "nothing here");
  }
}

TEST(Judge, AccuracyPromptGetsExpertAndContext) {
  auto g = scripted(R"({"catch_all": true, "response": "ok\nTotal Score: 4"})");
  const Judge judge(*g, JudgeConfig::with_default_prompts({"Ledgerly", "Ledgerly Finance"}));
  RetrievedContext ctx;
  ctx.rendered = "[kb.md]\nReconnect steps";
  const auto acc = judge.render(review(), "Try again", ctx, Category::accuracy);
  EXPECT_NE(acc.find("Reconnect the bank in Settings > Accounts."), std::string::npos);
  EXPECT_NE(acc.find("[kb.md]\nReconnect steps"), std::string::npos);
  EXPECT_NE(acc.find("Agent response: Try again"), std::string::npos);
  EXPECT_NE(acc.find("Ledgerly app"), std::string::npos);
  const auto gram = judge.render(review(), "Try again", ctx, Category::grammar);
  EXPECT_EQ(gram.find("Reconnect the bank"), std::string::npos);
  Review no_expert = review();
  no_expert.expert_response.reset();
  EXPECT_THROW(judge.render(no_expert, "x", ctx, Category::accuracy), PreconditionError);
}

TEST(Judge, FullFeedbackAggregatesScoresAndSuggestions) {
  auto g = scripted(R"(
{"order": 1, "contains": "rate the relevancy", "response": "On topic.\nTotal Score: 5"}
{"order": 2, "contains": "accurate", "response": "Misses the reconnect step.\nTotal Score: 3"}
{"order": 3, "contains": "grammatical", "response": "Fine.\nTotal Score: 5"}
{"order": 4, "catch_all": true, "response": "Generic, never names the app.\nTotal Score: 2"}
)");
  const Judge judge(*g, JudgeConfig::with_default_prompts({"Ledgerly", "Ledgerly Finance"}));
  const auto fb = judge.judge_full(review(), "Sorry to hear that.", RetrievedContext{});
  EXPECT_EQ(fb.score(Category::relevancy).raw, 5.0);
  EXPECT_EQ(fb.score(Category::accuracy).raw, 3.0);
  EXPECT_EQ(fb.score(Category::app_specificity).raw, 2.0);
  EXPECT_EQ(fb.score(Category::grammar).raw, 5.0);
  EXPECT_DOUBLE_EQ(fb.overall, (1.0 + 2 * 0.5 + 0.25 + 1.0) / 5.0);
  EXPECT_EQ(fb.suggestions, "Misses the reconnect step.\nGeneric, never names the app.");
}

TEST(Judge, RetriesMalformedOutputWithinBudget) {
  auto g = scripted(R"(
{"order": 1, "contains": "Total Score", "response": "I cannot decide.", "times": 2}
{"order": 2, "catch_all": true, "response": "Now decided.\nTotal Score: 4.5"}
)");
  const Judge judge(*g, JudgeConfig::with_default_prompts({"Ledgerly", "Ledgerly Finance"}));
  const auto s = judge.judge_category(review(), "x", RetrievedContext{}, Category::grammar);
  EXPECT_EQ(s.raw, 4.5);
  EXPECT_EQ(s.normalized, 0.875);
}

TEST(Judge, FailsAfterBudgetNamingReviewAndCategory) {
  auto g = scripted(R"({"catch_all": true, "response": "Total Score: 9"})");
  auto config = JudgeConfig::with_default_prompts({"Ledgerly", "Ledgerly Finance"});
  config.parse_retry_budget = 1;
  const Judge judge(*g, config);
  try {
    judge.judge_full(review(), "x", RetrievedContext{});
    FAIL();
  } catch (const JudgeFailure& e) {
    EXPECT_EQ(e.review_id(), "r1");
    EXPECT_EQ(e.category(), Category::relevancy);
  }
}

TEST(Judge, OverlongJustificationStillScores) {
  std::string words;
  for (int i = 0; i < 160; ++i) words += "word ";
  auto g = scripted(nlohmann::json{{"catch_all", true}, {"response", words + "\nTotal Score: 3"}}.dump());
  const Judge judge(*g, JudgeConfig::with_default_prompts({"Ledgerly", "Ledgerly Finance"}));
  EXPECT_EQ(judge.judge_category(review(), "x", RetrievedContext{}, Category::grammar).raw, 3.0);
}

TEST(JudgeConfig, ValidationRejectsBadSettings) {
  auto c = JudgeConfig::with_default_prompts({});
  c.category_threshold = 1.5;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = JudgeConfig{};
  EXPECT_THROW(c.validate(), PreconditionError);
}

}  // namespace
}  // namespace revopt
