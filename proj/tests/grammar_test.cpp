// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "support/generators.hpp"
#include "vadr/error.hpp"
#include "vadr/grammar.hpp"

namespace vadr::grammar {
namespace {

const Taxonomy& tax() { return Taxonomy::builtin(); }

ParseErrorClass error_of(std::string_view raw) {
  auto out = parse_response(raw, tax());
  EXPECT_FALSE(out.ok()) << raw;
  return out.ok() ? ParseErrorClass::TagMismatch : out.error().kind;
}

TEST(Parse, PerceptionOnly) {
  auto out = parse_response("<think><perception>A street.</perception></think><answer>B</answer>", tax());
  ASSERT_TRUE(out.ok());
  const auto& r = out.response();
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.stages[0].kind, StageKind::Perception);
  EXPECT_EQ(r.stages[0].text, "A street.");
  EXPECT_EQ(r.answer, "B");
  EXPECT_FALSE(r.judgment);
  EXPECT_FALSE(r.risk);
  EXPECT_EQ(reasoning_depth(out), 1);
}

TEST(Parse, OutOfOrderStagesRejected) {
  EXPECT_EQ(error_of("<think><action>run</action><perception>see</perception></think><answer>x</answer>"),
            ParseErrorClass::StageOrdering);
  EXPECT_EQ(error_of("<think><cognition>a</cognition><perception>b</perception></think><answer>x</answer>"),
            ParseErrorClass::StageOrdering);
}

TEST(Parse, FullThreeStage) {
  const std::string raw =
      "<think><perception>Two people near a door.</perception>"
      "<cognition>They trade blows.<which>Fighting</which><when>0.2,0.6</when></cognition>"
      "<action>Alert security.<risk>High</risk></action></think><answer>A fight.</answer>";
  auto out = parse_response(raw, tax());
  ASSERT_TRUE(out.ok());
  const auto& r = out.response();
  ASSERT_TRUE(r.judgment);
  EXPECT_EQ(r.judgment->category, "Fighting");
  ASSERT_TRUE(r.judgment->interval);
  EXPECT_EQ(*r.judgment->interval, TemporalInterval(0.2, 0.6));
  EXPECT_EQ(r.risk, RiskLevel::High);
  EXPECT_EQ(reasoning_depth(out), 3);
  EXPECT_EQ(r.stage(StageKind::Cognition)->text, "They trade blows.");
  EXPECT_EQ(r.raw, raw);
}

TEST(Parse, CategoryIsCanonicalized) {
  auto out = parse_response(
      "<think><cognition><which>  traffic   ACCIDENT </which><when>0,1</when></cognition></think>"
      "<answer>x</answer>",
      tax());
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.response().judgment->category, "Traffic Accident");
}

TEST(Parse, WhitespaceBetweenTagsIgnored) {
  auto out = parse_response(
      "  <think>\n  <perception>p</perception>\n</think>\n<answer>B</answer>\n", tax());
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.response().answer, "B");
}

TEST(Parse, ErrorClasses) {
  EXPECT_EQ(error_of("<think><perception>p</think><answer>x</answer>"), ParseErrorClass::TagMismatch);
  EXPECT_EQ(error_of("<think><perception>p</perception></think>"), ParseErrorClass::MissingAnswer);
  EXPECT_EQ(error_of("<think><cognition><which>Fighting</which><when>0.7,0.2</when></cognition></think>"
                     "<answer>x</answer>"),
            ParseErrorClass::BadInterval);
  EXPECT_EQ(error_of("<think><cognition><which>Fighting</which><when>0.2,1.5</when></cognition></think>"
                     "<answer>x</answer>"),
            ParseErrorClass::BadInterval);
  EXPECT_EQ(error_of("<think><cognition><which>Fighting</which></cognition></think><answer>x</answer>"),
            ParseErrorClass::BadInterval);
  EXPECT_EQ(error_of("<think><cognition><which>normal</which><when>0.1,0.2</when></cognition></think>"
                     "<answer>x</answer>"),
            ParseErrorClass::BadInterval);
  EXPECT_EQ(error_of("<think><action>a<risk>Severe</risk></action></think><answer>x</answer>"),
            ParseErrorClass::BadRisk);
  EXPECT_EQ(error_of("<think><action>a<risk>high</risk></action></think><answer>x</answer>"),
            ParseErrorClass::BadRisk);
  EXPECT_EQ(error_of("<think><cognition><which>Alien Invasion</which><when>0,1</when></cognition></think>"
                     "<answer>x</answer>"),
            ParseErrorClass::UnknownCategory);
  EXPECT_EQ(error_of("<think><perception>a</perception><perception>b</perception></think><answer>x</answer>"),
            ParseErrorClass::DuplicateStage);
}

TEST(Parse, ErrorOffsetWithinInput) {
  const std::string raw = "<think><perception>p</perception>";
  auto out = parse_response(raw, tax());
  ASSERT_FALSE(out.ok());
  EXPECT_LE(out.error().offset, raw.size());
  EXPECT_FALSE(out.error().message.empty());
}

TEST(Render, IntervalUsesFixedSixDecimals) {
  StructuredResponse r;
  r.stages = {{StageKind::Cognition, "c"}};
  r.judgment = AnomalyJudgment{"Fire", TemporalInterval(0.0, 1.0)};
  r.answer = "y";
  const auto text = render_response(r);
  EXPECT_NE(text.find("<when>0.000000,1.000000</when>"), std::string::npos) << text;
}

TEST(Render, RiskAppearsOnce) {
  StructuredResponse r;
  r.stages = {{StageKind::Perception, "p"}, {StageKind::Action, "act"}};
  r.risk = RiskLevel::Medium;
  r.answer = "z";
  const auto text = render_response(r);
  const std::string tag = "<risk>Medium</risk>";
  const auto first = text.find(tag);
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(text.find(tag, first + 1), std::string::npos);
}

TEST(Render, DepthOneRoundTrip) {
  StructuredResponse r;
  r.stages = {{StageKind::Perception, "A street at night."}};
  r.answer = "B";
  EXPECT_EQ(render_response(r), "<think><perception>A street at night.</perception></think><answer>B</answer>");
  auto back = parse_response(render_response(r), tax());
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back.response(), r);
}

TEST(Render, RejectsBrokenInvariants) {
  StructuredResponse r;
  r.stages = {{StageKind::Action, "a"}, {StageKind::Perception, "p"}};
  r.answer = "x";
  EXPECT_THROW(render_response(r), PreconditionError);

  StructuredResponse risk_only;
  risk_only.stages = {{StageKind::Perception, "p"}};
  risk_only.risk = RiskLevel::Low;
  risk_only.answer = "x";
  EXPECT_THROW(render_response(risk_only), PreconditionError);

  StructuredResponse normal_with_interval;
  normal_with_interval.stages = {{StageKind::Cognition, "c"}};
  normal_with_interval.judgment = AnomalyJudgment{"normal", TemporalInterval(0.1, 0.2)};
  normal_with_interval.answer = "x";
  EXPECT_THROW(render_response(normal_with_interval), PreconditionError);

  StructuredResponse tag_in_text;
  tag_in_text.stages = {{StageKind::Perception, "a <risk>"}};
  tag_in_text.answer = "x";
  EXPECT_THROW(render_response(tag_in_text), PreconditionError);

  StructuredResponse empty_answer;
  empty_answer.stages = {{StageKind::Perception, "p"}};
  empty_answer.answer = "  ";
  EXPECT_THROW(render_response(empty_answer), PreconditionError);
}

TEST(RoundTrip, GeneratedResponses) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const auto r = testing::random_response(rng, tax());
    const auto text = render_response(r);
    const auto back = parse_response(text, tax());
    ASSERT_TRUE(back.ok()) << text << "\n" << back.error().message;
    ASSERT_EQ(back.response(), r) << text;
    ASSERT_EQ(render_response(back.response()), text);
  }
}

TEST(Fuzz, NeverThrowsAndAlwaysClassifies) {
  Rng rng(12);
  const std::set<ParseErrorClass> known = {
      ParseErrorClass::TagMismatch, ParseErrorClass::StageOrdering, ParseErrorClass::MissingAnswer,
      ParseErrorClass::BadInterval, ParseErrorClass::BadRisk,       ParseErrorClass::UnknownCategory,
      ParseErrorClass::DuplicateStage};
  for (int i = 0; i < 4000; ++i) {
    const auto raw = testing::fuzz_input(rng, tax(), 4096, i);
    ParseOutcome out = parse_response(raw, tax());
    if (!out.ok()) {
      ASSERT_TRUE(known.count(out.error().kind));
      ASSERT_LE(out.error().offset, raw.size());
    } else {
      ASSERT_NO_THROW(check_invariants(out.response()));
    }
  }
}

TEST(Depth, DeepestStage) {
  StructuredResponse r;
  r.stages = {{StageKind::Perception, "p"}, {StageKind::Cognition, "c"}};
  EXPECT_EQ(reasoning_depth(r), 2);
  r.stages.push_back({StageKind::Action, "a"});
  EXPECT_EQ(reasoning_depth(r), 3);
  EXPECT_EQ(reasoning_depth(ParseOutcome(ParseError{ParseErrorClass::TagMismatch, 0, "x"})), 0);
}

TEST(Depth, ExpectedPerKind) {
  EXPECT_EQ(expected_depth(QuestionKind::PerceptionOpen), 1);
  EXPECT_EQ(expected_depth(QuestionKind::PerceptionMCQ), 1);
  EXPECT_EQ(expected_depth(QuestionKind::CognitionMCQ), 2);
  EXPECT_EQ(expected_depth(QuestionKind::CognitionOpen), 2);
  EXPECT_EQ(expected_depth(QuestionKind::ActionMCQ), 3);
  EXPECT_EQ(expected_depth(QuestionKind::ActionOpen), 3);
}

}  // namespace
}  // namespace vadr::grammar
