// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "support/generators.hpp"
#include "vadr/bound_api.hpp"

namespace vadr::api {
namespace {

using Doc = nlohmann::ordered_json;

const Taxonomy& tax() { return Taxonomy::builtin(); }
const std::filesystem::path kFixtures = VADR_FIXTURES;

Doc records_doc() {
  Doc recs = Doc::array();
  std::ifstream in(kFixtures / "score" / "records.jsonl");
  for (std::string line; std::getline(in, line);) recs.push_back(Doc::parse(line));
  return recs;
}

Doc responses_doc() {
  Doc out = Doc::array();
  std::ifstream in(kFixtures / "score" / "responses.txt");
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(Parse, OkDocument) {
  const auto doc = Doc::parse(bound_parse(
      "<think><perception>p</perception><cognition>c<which>Fire</which><when>0.1,0.3</when></cognition></think>"
      "<answer>B</answer>",
      tax()));
  EXPECT_EQ(doc["ok"], true);
  EXPECT_EQ(doc["depth"], 2);
  EXPECT_EQ(doc["response"]["stages"][1]["kind"], "cognition");
  EXPECT_EQ(doc["response"]["judgment"]["category"], "Fire");
  EXPECT_EQ(doc["response"]["judgment"]["interval"], Doc::array({0.1, 0.3}));
  EXPECT_TRUE(doc["response"]["risk"].is_null());
  EXPECT_EQ(doc["response"]["answer"], "B");
}

TEST(Parse, ErrorDocument) {
  const auto doc = Doc::parse(bound_parse("<think><action>a<risk>Extreme</risk></action></think><answer>x</answer>",
                                          tax()));
  EXPECT_EQ(doc["ok"], false);
  EXPECT_EQ(doc["depth"], 0);
  EXPECT_EQ(doc["error"]["class"], "BadRisk");
  EXPECT_TRUE(doc["error"]["offset"].is_number_unsigned());
}

TEST(Parse, MatchesKernelOnRandomInputs) {
  Rng rng(51);
  for (int i = 0; i < 1000; ++i) {
    const auto raw = (i % 2 == 0) ? grammar::render_response(testing::random_response(rng, tax()))
                                  : testing::random_tag_soup(rng, 512);
    const auto out = grammar::parse_response(raw, tax());
    ASSERT_EQ(bound_parse(raw, tax()), outcome_to_json(out).dump());
  }
}

TEST(Parse, InvalidUtf8IsReplaced) {
  const std::string raw = "<think><perception>\xff\xfe</perception></think><answer>\xc3</answer>";
  const auto doc = Doc::parse(bound_parse(raw, tax()));
  EXPECT_EQ(doc["ok"], true);
  EXPECT_EQ(doc["response"]["answer"], "\xef\xbf\xbd");
}

TEST(Score, FixtureBreakdowns) {
  const Doc in = {{"records", records_doc()}, {"responses", responses_doc()}, {"groups", {2}}};
  const auto out = Doc::parse(bound_score(in.dump(), tax()));
  ASSERT_FALSE(out.contains("error")) << out.dump();
  ASSERT_EQ(out["breakdowns"].size(), 2u);
  EXPECT_DOUBLE_EQ(out["breakdowns"][0]["total"].get<double>(), 2.8714285714285714);
  EXPECT_DOUBLE_EQ(out["breakdowns"][1]["total"].get<double>(), 3.0);
  ASSERT_EQ(out["advantages"].size(), 1u);
  EXPECT_NEAR(out["advantages"][0][0].get<double>(), -1.0, 1e-12);
  EXPECT_NEAR(out["advantages"][0][1].get<double>(), 1.0, 1e-12);
}

TEST(Score, VerificationValuesAreAdded) {
  const Doc in = {{"records", records_doc()}, {"responses", responses_doc()}, {"verification", {1.0, 0.0}}};
  const auto out = Doc::parse(bound_score(in.dump(), tax()));
  EXPECT_DOUBLE_EQ(out["breakdowns"][0]["verification"].get<double>(), 1.0);
  EXPECT_NEAR(out["breakdowns"][0]["total"].get<double>(), 3.8714285714285714, 1e-12);
}

TEST(Score, Errors) {
  const auto err = [](const std::string& doc) {
    const auto out = Doc::parse(bound_score(doc, tax()));
    return out.contains("error") ? out["error"]["class"].get<std::string>() : std::string();
  };
  EXPECT_EQ(err("not json"), "Json");
  EXPECT_EQ(err(R"({"records": []})"), "Schema");
  Doc misaligned = {{"records", records_doc()}, {"responses", {"x"}}};
  EXPECT_EQ(err(misaligned.dump()), "Alignment");
  Doc bad_groups = {{"records", records_doc()}, {"responses", responses_doc()}, {"groups", {3}}};
  EXPECT_EQ(err(bad_groups.dump()), "Alignment");
  Doc bad_cfg = {{"records", records_doc()},
                 {"responses", responses_doc()},
                 {"config", {{"risk_schedule", {0.0, 0.5, 1.0}}}}};
  EXPECT_EQ(err(bad_cfg.dump()), "Precondition");
  EXPECT_EQ(err(R"({"records": [], "responses": []})"), "");
}

TEST(Advantages, WorkedExample) {
  const auto out = Doc::parse(bound_advantages(R"({"rewards": [1, 2, 3]})"));
  EXPECT_NEAR(out["advantages"][0].get<double>(), -1.22474, 1e-5);
  EXPECT_EQ(out["advantages"][1].get<double>(), 0.0);
  EXPECT_NEAR(out["advantages"][2].get<double>(), 1.22474, 1e-5);
  EXPECT_EQ(Doc::parse(bound_advantages(R"({"rewards": [1]})"))["error"]["class"], "Precondition");
  EXPECT_EQ(Doc::parse(bound_advantages(R"({"rewards": []})"))["error"]["class"], "Precondition");
}

TEST(Lexical, Document) {
  const auto out = Doc::parse(bound_lexical(R"({"candidate": "a b c", "reference": "a b d"})"));
  EXPECT_DOUBLE_EQ(out["rouge2"]["f1"].get<double>(), 0.5);
  EXPECT_TRUE(out.contains("bleu4"));
  EXPECT_TRUE(out.contains("meteor_basic"));
  EXPECT_EQ(Doc::parse(bound_lexical(R"({"candidate": 3})"))["error"]["class"], "Schema");
}

TEST(Joint, Document) {
  const auto out = Doc::parse(bound_joint(
      R"({"inputs": [{"reasoning_ok": true, "answer_ok": true, "category_ok": true},
                     {"reasoning_ok": false, "answer_ok": false, "category_ok": false}]})"));
  EXPECT_DOUBLE_EQ(out["RR"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(out["WWW"].get<double>(), 0.5);
  EXPECT_EQ(Doc::parse(bound_joint(R"({"inputs": [{"reasoning_ok": true, "answer_ok": true}]})"))["error"]["class"],
            "Precondition");
}

}  // namespace
}  // namespace vadr::api
