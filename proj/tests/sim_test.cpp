// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vadr/error.hpp"
#include "vadr/rewards.hpp"
#include "vadr/sim.hpp"

namespace vadr::sim {
namespace {

const Taxonomy& tax() { return Taxonomy::builtin(); }
const dataset::TemplateLibrary& lib() { return dataset::TemplateLibrary::builtin(); }

std::string dump(const Corpus& c) {
  std::ostringstream out;
  dataset::save_records(out, c.records);
  return out.str() + c.sidecar().dump();
}

CorpusSpec small_spec(std::uint64_t seed) {
  CorpusSpec s;
  s.per_category = {{"Fighting", 4}, {"Fire", 4}, {"Jaywalking", 4}};
  s.normal_videos = 4;
  s.seed = seed;
  return s;
}

TEST(Corpus, Deterministic) {
  EXPECT_EQ(dump(generate_corpus(small_spec(3), tax(), lib())), dump(generate_corpus(small_spec(3), tax(), lib())));
  EXPECT_NE(dump(generate_corpus(small_spec(3), tax(), lib())), dump(generate_corpus(small_spec(4), tax(), lib())));
}

TEST(Corpus, NormalOnly) {
  CorpusSpec s;
  s.normal_videos = 10;
  const auto c = generate_corpus(s, tax(), lib());
  ASSERT_EQ(c.videos.size(), 10u);
  for (const auto& v : c.videos) {
    EXPECT_FALSE(v.anomaly);
    for (const auto& f : v.frames) EXPECT_FALSE(symbol_category(f));
  }
  EXPECT_EQ(c.records.size(), 60u);
}

TEST(Corpus, PlantedAnomalyCarriesMappedRisk) {
  CorpusSpec s;
  s.per_category = {{"Fighting", 3}};
  const auto c = generate_corpus(s, tax(), lib());
  for (const auto& v : c.videos) {
    ASSERT_TRUE(v.anomaly);
    EXPECT_EQ(v.anomaly->category, "Fighting");
    EXPECT_EQ(v.risk, tax().risk_of("Fighting"));
    const double len = v.anomaly->interval.end() - v.anomaly->interval.start();
    EXPECT_GE(len, s.min_length - 1e-9);
    EXPECT_LE(len, s.max_length + 1e-9);
    const auto tl = v.timeline();
    for (const auto& f : tl.frames()) {
      EXPECT_EQ(symbol_category(f.token).has_value(), v.anomaly->interval.contains(f.timestamp)) << f.timestamp;
    }
  }
  for (const auto& r : c.records) {
    if (r.kind == QuestionKind::ActionMCQ || r.kind == QuestionKind::ActionOpen) {
      EXPECT_EQ(r.gold_risk, RiskLevel::High);
    }
  }
}

TEST(Corpus, UniformSpecSplits) {
  const auto c = generate_corpus(CorpusSpec::uniform(tax(), 4, 52, 0), tax(), lib());
  EXPECT_EQ(c.videos.size(), 200u);
  const auto counts = dataset::count_splits(c.records);
  EXPECT_EQ(counts.videos.at(dataset::Split::Sft), 50u);
  EXPECT_EQ(counts.videos.at(dataset::Split::Test), 50u);
  EXPECT_EQ(counts.videos.at(dataset::Split::Rl), 100u);
  for (auto r : c.records) EXPECT_NO_THROW(dataset::validate_record(r, tax()));
}

TEST(Corpus, InfeasibleSpec) {
  CorpusSpec s;
  s.per_category = {{"Fighting", 1}};
  s.min_length = 0.31;
  s.max_length = 0.34;
  EXPECT_THROW(generate_corpus(s, tax(), lib()), PreconditionError);
}

TEST(Corpus, SidecarRoundTrip) {
  const auto c = generate_corpus(small_spec(5), tax(), lib());
  const auto path = std::filesystem::temp_directory_path() / "vadr_sidecar_test.json";
  std::ofstream(path) << c.sidecar().dump();
  const auto back = load_sidecar(path);
  ASSERT_EQ(back.size(), c.videos.size());
  for (const auto& v : c.videos) EXPECT_EQ(back.at(v.id), v.frames);
  std::filesystem::remove(path);
}

VideoTimeline frames_of(int n) {
  std::vector<std::string> t;
  for (int i = 0; i < n; ++i) t.push_back(normal_symbol(i % kNormalSymbols));
  return VideoTimeline::uniform(t);
}

TEST(Observe, SamplingRule) {
  const auto sixteen = observe(frames_of(16));
  EXPECT_EQ(sixteen.n_sampled, 16);
  EXPECT_EQ(sixteen.samples, frames_of(16).frames());
  const auto five = observe(frames_of(5));
  EXPECT_EQ(five.n_sampled, 5);
  const auto many = observe(frames_of(61));
  ASSERT_EQ(many.n_sampled, 16);
  for (int k = 0; k < 16; ++k) EXPECT_DOUBLE_EQ(many.samples[k].timestamp, frames_of(61).frames()[4 * k].timestamp);
  int total = 0;
  for (const auto& [sym, n] : many.counts) {
    EXPECT_FALSE(symbol_category(sym));
    total += n;
  }
  EXPECT_EQ(total, 16);
  EXPECT_THROW(observe(frames_of(5), 0), PreconditionError);
}

struct World {
  Corpus corpus = generate_corpus(small_spec(7), tax(), lib());
  SimEnv env = SimEnv::from_corpus(tax(), corpus);
};

std::shared_ptr<const ToyPolicy> random_toy(Rng& rng, double scale) {
  std::vector<double> th(ToyPolicy::parameter_count(tax()));
  for (auto& v : th) v = scale * (2.0 * uniform01(rng) - 1.0);
  return std::make_shared<ToyPolicy>(tax(), lib(), std::move(th));
}

TEST(ToyPolicy, ParameterCount) { EXPECT_GE(ToyPolicy::parameter_count(tax()), 50u); }

TEST(ToyPolicy, EmissionsParseAndMatchLogProb) {
  World w;
  Rng rng(21);
  for (int i = 0; i < 40; ++i) {
    const auto p = random_toy(rng, 2.0);
    for (std::size_t r = 0; r < w.corpus.records.size(); r += 5) {
      const auto& q = w.corpus.records[r];
      const auto in = w.env.input_for(q);
      const auto e = p->sample(in, rng, false);
      const auto text = p->decode(in, e.tokens);
      const auto out = grammar::parse_response(text, tax());
      ASSERT_TRUE(out.ok()) << text << "\n" << out.error().message;
      EXPECT_EQ(out.response(), p->to_response(in, e.tokens));
      const auto lp = p->log_prob(in, e.tokens);
      ASSERT_EQ(lp.size(), e.logps.size());
      for (std::size_t t = 0; t < lp.size(); ++t) EXPECT_NEAR(lp[t], e.logps[t], 1e-12);
      EXPECT_EQ(p->encode(in, out.response()), e.tokens);
      const int depth = grammar::reasoning_depth(out);
      if (depth == 2) {
        ASSERT_EQ(out.response().stages.size(), 2u);
        EXPECT_EQ(out.response().stages[0].kind, StageKind::Perception);
        EXPECT_EQ(out.response().stages[1].kind, StageKind::Cognition);
      }
    }
  }
}

TEST(ToyPolicy, GreedyIsDeterministic) {
  World w;
  Rng init(22);
  const auto p = random_toy(init, 1.0);
  const auto& q = w.corpus.records.front();
  const auto features = observe(w.env.timeline_for(q));
  Rng a(1), b(99);
  const auto x = sample_structured(*p, features, q, a, true);
  const auto y = sample_structured(*p, features, q, b, true);
  EXPECT_EQ(x.text, y.text);
  EXPECT_EQ(x.tokens, y.tokens);
  EXPECT_EQ(x.logps, y.logps);
}

TEST(ToyPolicy, RejectsForeignTokens) {
  World w;
  const ToyPolicy p(tax(), lib());
  const auto in = w.env.input_for(w.corpus.records.front());
  EXPECT_THROW(p.log_prob(in, std::vector<int>{99}), PreconditionError);
  grammar::StructuredResponse odd;
  odd.stages = {{StageKind::Perception, "text outside the bank"}};
  odd.answer = "A";
  EXPECT_THROW(p.encode(in, odd), PreconditionError);
}

TEST(ToyPolicy, GradientsMatchFiniteDifferences) {
  World w;
  Rng rng(23);
  const auto p = random_toy(rng, 0.5);
  const auto ref = random_toy(rng, 0.5);
  const auto old_p = random_toy(rng, 0.5);
  auto sft_records = filter_split(w.corpus.records, dataset::Split::Sft);
  const auto batches = make_sft_batches(sft_records, w.env, *p);
  ASSERT_FALSE(batches.empty());
  const grpo::ParamLoss sft = [&](const std::vector<double>& th, std::vector<double>* g) {
    return grpo::sft_loss(*p->with_parameters(th), batches.front(), g);
  };
  EXPECT_LT(grpo::finite_diff_check(*p, sft), 1e-5);

  grpo::RolloutGroup g;
  g.input = w.env.input_for(w.corpus.records[3]);
  for (int i = 0; i < 4; ++i) {
    grpo::Completion c;
    c.tokens = old_p->sample(g.input, rng, false).tokens;
    c.old_logps = old_p->log_prob(g.input, c.tokens);
    g.completions.push_back(c);
  }
  g.advantages = {1.2, -0.3, 0.5, -1.4};
  grpo::GrpoConfig cfg;
  cfg.kl_beta = 0.04;
  cfg.clip_epsilon = 0.2;
  const grpo::ParamLoss obj = [&](const std::vector<double>& th, std::vector<double>* grad) {
    return grpo::grpo_objective(g, *p->with_parameters(th), *ref, cfg, grad).value;
  };
  EXPECT_LT(grpo::finite_diff_check(*p, obj), 1e-5);
}

TEST(ToyPolicy, EvidenceFollowingIsRewardedAndVerified) {
  World w;
  const auto p = std::make_shared<ToyPolicy>(tax(), lib(), ToyPolicy::evidence_following(tax(), lib()));
  InProcessOracle oracle(p);
  Rng rng(24);
  const rewards::RewardConfig cfg;
  int abnormal_checked = 0;
  for (const auto& q : w.corpus.records) {
    const auto in = w.env.input_for(q);
    const auto text = p->decode(in, p->sample(in, rng, true).tokens);
    const auto out = grammar::parse_response(text, tax());
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(grammar::reasoning_depth(out), grammar::expected_depth(q.kind)) << text;
    const auto b = rewards::score_response(out, q, cfg);
    EXPECT_EQ(b.format, 1.0);
    EXPECT_EQ(b.depth, 1.0);
    if (q.gold_risk) EXPECT_EQ(b.risk, 1.0) << text;
    if (dataset::Split::Test == q.split && is_mcq(q.kind)) EXPECT_EQ(b.accuracy, 1.0) << text;
    const auto& resp = out.response();
    if (resp.judgment && resp.judgment->abnormal()) {
      EXPECT_EQ(resp.judgment->category, q.gold_category);
      EXPECT_EQ(rewards::verification_reward(resp, q, w.env.timeline_for(q), oracle, tax(), rng, cfg), 1.0);
      ++abnormal_checked;
    }
  }
  EXPECT_GT(abnormal_checked, 0);
}

TEST(ToyPolicy, JsonRoundTrip) {
  Rng rng(25);
  const auto p = random_toy(rng, 1.0);
  const auto back = policy_from_json(nlohmann::json::parse(policy_to_json(*p).dump()), tax(), lib());
  EXPECT_EQ(back->parameters(), p->parameters());
  EXPECT_THROW(policy_from_json(nlohmann::json{{"type", "toy"}, {"parameters", {1.0, 2.0}}}, tax(), lib()),
               PreconditionError);
}

TEST(SimEnv, UnknownVideoIsPrecondition) {
  World w;
  auto q = w.corpus.records.front();
  q.video_id = "missing";
  EXPECT_THROW(w.env.input_for(q), PreconditionError);
}

TEST(Pipeline, ShortRunImprovesReward) {
  const auto corpus = generate_corpus(small_spec(8), tax(), lib());
  const auto env = SimEnv::from_corpus(tax(), corpus);
  auto init = std::make_shared<ToyPolicy>(tax(), lib());
  grpo::RlOptions opts;
  opts.grpo = desk_rl_config();
  opts.grpo.steps = 120;
  Rng rng(0);
  const auto rl = filter_split(corpus.records, dataset::Split::Rl);
  auto [policy, trace] = grpo::train_rl(init, init, rl, env, opts, rng);
  ASSERT_EQ(trace.records.size(), 120u);
  EXPECT_GT(trace.mean_reward(100, 120), trace.mean_reward(0, 20));
}

}  // namespace
}  // namespace vadr::sim
