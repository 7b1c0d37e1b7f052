// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "vadr/error.hpp"
#include "vadr/grpo.hpp"

namespace vadr::grpo {
namespace {

std::vector<double> random_theta(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> th(n);
  for (auto& v : th) v = scale * (2.0 * uniform01(rng) - 1.0);
  return th;
}

PolicyPtr tabular(int length, int symbols, std::vector<double> theta) {
  return std::make_shared<TabularSequencePolicy>(length, symbols, std::move(theta));
}

PolicyPtr random_tabular(int length, int symbols, Rng& rng, double scale = 1.0) {
  return tabular(length, symbols,
                 random_theta(TabularSequencePolicy::parameter_count(length, symbols), rng, scale));
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double pop_std(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

TEST(Advantages, WorkedExamples) {
  EXPECT_EQ(compute_advantages({1, 1, 1, 1}), (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(compute_advantages({0.1, 0.1, 0.1}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(compute_advantages({-1.7, -1.7, -1.7, -1.7, -1.7, -1.7, -1.7}), std::vector<double>(7, 0.0));
  const auto two = compute_advantages({0, 2});
  EXPECT_DOUBLE_EQ(two[0], -1.0);
  EXPECT_DOUBLE_EQ(two[1], 1.0);
  const auto three = compute_advantages({1, 2, 3});
  EXPECT_NEAR(three[0], -1.224744871391589, 1e-12);
  EXPECT_EQ(three[1], 0.0);
  EXPECT_NEAR(three[2], 1.224744871391589, 1e-12);
}

TEST(Advantages, Preconditions) {
  EXPECT_THROW(compute_advantages({1.0}), PreconditionError);
  EXPECT_THROW(compute_advantages({1.0, 2.0}, 0.0), PreconditionError);
}

TEST(Advantages, StdFloorCapsTinyGroups) {
  const auto a = compute_advantages({0.0, 1e-9}, 1e-6);
  EXPECT_NEAR(a[1] - a[0], 1e-9 / 1e-6, 1e-12);
}

TEST(Advantages, NormalizedAndInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 7);
    std::vector<double> r(g);
    for (auto& v : r) v = 10.0 * uniform01(rng) - 5.0;
    const auto a = compute_advantages(r);
    if (pop_std(r) > 1e-6) {
      EXPECT_LT(std::abs(mean(a)), 1e-9);
      EXPECT_LT(std::abs(pop_std(a) - 1.0), 1e-9);
    }
    const double shift = 8.0 * uniform01(rng) - 4.0;
    const double scale = 0.1 + 4.0 * uniform01(rng);
    std::vector<double> shifted(r), scaled(r);
    for (std::size_t i = 0; i < g; ++i) {
      shifted[i] += shift;
      scaled[i] *= scale;
    }
    const auto as = compute_advantages(shifted);
    const auto ak = compute_advantages(scaled);
    for (std::size_t i = 0; i < g; ++i) {
      EXPECT_NEAR(as[i], a[i], 1e-9);
      EXPECT_NEAR(ak[i], a[i], 1e-9);
    }
  }
}

TEST(Surrogate, ClipRegions) {
  const double eps = 0.2;
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, 1.0, eps), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, eps), -0.8);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, 1.0, eps), 0.5);
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, -1.0, eps), -1.5);
  EXPECT_EQ(clipped_surrogate_drho(1.5, 1.0, eps), 0.0);
  EXPECT_EQ(clipped_surrogate_drho(0.5, -1.0, eps), 0.0);
  EXPECT_EQ(clipped_surrogate_drho(1.1, 2.0, eps), 2.0);
  EXPECT_EQ(clipped_surrogate_drho(1.5, -2.0, eps), -2.0);
  for (double rho : {0.3, 0.7, 0.95, 1.05, 1.3, 2.0}) {
    for (double a : {-1.5, -0.2, 0.4, 2.0}) {
      const double h = 1e-6;
      const double fd = (clipped_surrogate(rho + h, a, eps) - clipped_surrogate(rho - h, a, eps)) / (2 * h);
      EXPECT_NEAR(fd, clipped_surrogate_drho(rho, a, eps), 1e-6) << rho << " " << a;
    }
  }
}

RolloutGroup group_of(const Policy& old, std::vector<std::vector<int>> seqs, std::vector<double> adv) {
  RolloutGroup g;
  for (auto& s : seqs) {
    Completion c;
    c.tokens = s;
    c.old_logps = old.log_prob(g.input, c.tokens);
    g.completions.push_back(std::move(c));
  }
  g.advantages = std::move(adv);
  return g;
}

TEST(Objective, ClippedSingleToken) {
  // p(0) = 0.75 under the new policy, 0.5 under the old: rho = 1.5.
  const auto old_p = tabular(1, 2, {0.0, 0.0});
  const auto new_p = tabular(1, 2, {std::log(3.0), 0.0});
  const auto g = group_of(*old_p, {{0}, {0}}, {1.0, 1.0});
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;
  const auto terms = grpo_objective(g, *new_p, *old_p, cfg);
  EXPECT_NEAR(terms.value, 1.2, 1e-12);
}

TEST(Objective, IdentityPoliciesGiveZero) {
  Rng rng(6);
  const auto p = random_tabular(3, 3, rng);
  const auto g = group_of(*p, {{0, 1, 2}, {2, 2, 1}, {1, 0, 0}}, {0.0, 0.0, 0.0});
  const auto terms = grpo_objective(g, *p, *p, GrpoConfig{});
  EXPECT_EQ(terms.value, 0.0);
  EXPECT_EQ(terms.kl, 0.0);
}

TEST(Objective, KlZeroOnSelfAndNonNegative) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_tabular(3, 3, rng, 2.0);
    const auto b = random_tabular(3, 3, rng, 2.0);
    const std::vector<int> toks = {static_cast<int>(uniform_index(rng, 3)), static_cast<int>(uniform_index(rng, 3)),
                                   static_cast<int>(uniform_index(rng, 3))};
    const auto self = a->step_kl({}, toks, *a);
    const auto other = a->step_kl({}, toks, *b);
    ASSERT_TRUE(self && other);
    for (double k : *self) EXPECT_EQ(k, 0.0);
    for (double k : *other) EXPECT_GE(k, 0.0);
  }
}

TEST(Objective, LengthMismatchIsPrecondition) {
  const auto p = tabular(2, 2, std::vector<double>(TabularSequencePolicy::parameter_count(2, 2), 0.0));
  auto g = group_of(*p, {{0, 1}, {1, 1}}, {1.0, -1.0});
  g.completions[0].old_logps.pop_back();
  EXPECT_THROW(grpo_objective(g, *p, *p, GrpoConfig{}), PreconditionError);
  g.advantages.pop_back();
  EXPECT_THROW(grpo_objective(g, *p, *p, GrpoConfig{}), PreconditionError);
}

TEST(Sft, ClosedForms) {
  const auto uniform4 = tabular(2, 4, std::vector<double>(TabularSequencePolicy::parameter_count(2, 4), 0.0));
  EXPECT_NEAR(sft_loss(*uniform4, {{}, {1, 3}}), 2.0 * std::log(4.0), 1e-12);
  const auto half = tabular(1, 2, {0.0, 0.0});
  EXPECT_NEAR(sft_loss(*half, {{}, {1}}), std::log(2.0), 1e-12);
  const auto sure = tabular(1, 2, {60.0, 0.0});
  EXPECT_LT(sft_loss(*sure, {{}, {0}}), 1e-20);
}

TEST(FiniteDiff, Quadratic) {
  const ParamLoss quad = [](const std::vector<double>& th, std::vector<double>* g) {
    if (g) *g = th;
    return 0.5 * (th[0] * th[0] + th[1] * th[1]);
  };
  EXPECT_LT(finite_diff_check({1.0, 2.0}, quad, 1e-6), 1e-8);
}

TEST(FiniteDiff, DetectsWrongGradient) {
  const ParamLoss wrong = [](const std::vector<double>& th, std::vector<double>* g) {
    if (g) *g = {2.0 * th[0], th[1]};
    return 0.5 * (th[0] * th[0] + th[1] * th[1]);
  };
  EXPECT_NEAR(finite_diff_check({1.0, 2.0}, wrong, 1e-6), 0.5, 1e-6);
}

TEST(FiniteDiff, SftAndObjectiveOnTabular) {
  Rng rng(8);
  const auto p = random_tabular(4, 4, rng);
  ASSERT_GE(p->parameters().size(), 50u);
  const SftBatch ex{{}, {0, 3, 1, 2}};
  const ParamLoss sft = [&](const std::vector<double>& th, std::vector<double>* g) {
    return sft_loss(*p->with_parameters(th), ex, g);
  };
  EXPECT_LT(finite_diff_check(*p, sft), 1e-5);

  const auto old_p = random_tabular(4, 4, rng, 0.5);
  const auto ref = random_tabular(4, 4, rng, 0.5);
  const auto g = group_of(*old_p, {{0, 1, 2, 3}, {3, 3, 0, 1}, {2, 0, 1, 1}, {1, 2, 3, 0}}, {1.3, -0.4, 0.2, -1.1});
  GrpoConfig cfg;
  cfg.kl_beta = 0.04;
  cfg.clip_epsilon = 0.2;
  const ParamLoss obj = [&](const std::vector<double>& th, std::vector<double>* grad) {
    return grpo_objective(g, *p->with_parameters(th), *ref, cfg, grad).value;
  };
  EXPECT_LT(finite_diff_check(*p, obj), 1e-5);
}

TEST(TrainSft, ZeroStepsIsNoOp) {
  Rng rng(9);
  const auto p = random_tabular(2, 3, rng);
  GrpoConfig cfg;
  cfg.steps = 0;
  auto [out, trace] = train_sft(p, {{{}, {0, 1}}}, cfg, rng);
  EXPECT_EQ(out->parameters(), p->parameters());
  EXPECT_TRUE(trace.records.empty());
}

TEST(TrainSft, LowersLossAndIsDeterministic) {
  Rng init(10);
  const auto p = random_tabular(3, 3, init);
  const std::vector<SftBatch> data = {{{}, {0, 1, 2}}, {{}, {0, 1, 1}}, {{}, {2, 1, 0}}};
  GrpoConfig cfg;
  cfg.steps = 300;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 2;
  Rng r1(3), r2(3);
  auto [a, ta] = train_sft(p, data, cfg, r1);
  auto [b, tb] = train_sft(p, data, cfg, r2);
  EXPECT_EQ(a->parameters(), b->parameters());
  std::ostringstream sa, sb;
  ta.write_jsonl(sa);
  tb.write_jsonl(sb);
  EXPECT_EQ(sa.str(), sb.str());
  double before = 0.0, after = 0.0;
  for (const auto& ex : data) {
    before += sft_loss(*p, ex);
    after += sft_loss(*a, ex);
  }
  EXPECT_LT(after, before);
  EXPECT_THROW(train_sft(p, {}, cfg, r1), PreconditionError);
}

class NullOracle final : public oracle::PolicyOracle {
 public:
  std::string query(const VideoTimeline&, const dataset::QuestionRecord&, bool) override {
    return "<think></think><answer>x</answer>";
  }
};

// Tabular policies decode to text that never parses, so every reward is 0.
class FlatEnv final : public RolloutEnv {
 public:
  FlatEnv() : timeline_(VideoTimeline::uniform({"a", "b", "c"})) {}
  PolicyInput input_for(const dataset::QuestionRecord&) const override { return {}; }
  const VideoTimeline& timeline_for(const dataset::QuestionRecord&) const override { return timeline_; }
  const Taxonomy& taxonomy() const override { return Taxonomy::builtin(); }
  std::unique_ptr<oracle::PolicyOracle> make_oracle(PolicyPtr) const override {
    return std::make_unique<NullOracle>();
  }

 private:
  VideoTimeline timeline_;
};

std::vector<dataset::QuestionRecord> perception_records() {
  dataset::QuestionRecord q;
  q.id = "q0";
  q.video_id = "v";
  q.kind = QuestionKind::PerceptionOpen;
  q.question = "What is visible?";
  q.reference_answer = "a street";
  q.gold_category = "normal";
  q.split = dataset::Split::Rl;
  return {q};
}

TEST(TrainRl, ConstantRewardsOnlyPullTowardRef) {
  Rng init(11);
  const auto p = random_tabular(2, 3, init);
  const auto ref = random_tabular(2, 3, init);
  FlatEnv env;
  RlOptions opts;
  opts.grpo.steps = 1;
  opts.grpo.learning_rate = 0.5;

  opts.grpo.kl_beta = 0.0;
  Rng r0(1);
  auto [unmoved, t0] = train_rl(p, ref, perception_records(), env, opts, r0);
  EXPECT_EQ(unmoved->parameters(), p->parameters());
  ASSERT_EQ(t0.records.size(), 1u);
  EXPECT_EQ(*t0.records[0].mean_reward, 0.0);

  opts.grpo.kl_beta = 0.04;
  opts.grpo.steps = 50;
  Rng r1(1);
  auto [pulled, t1] = train_rl(p, ref, perception_records(), env, opts, r1);
  EXPECT_LT(*t1.records.back().kl, *t1.records.front().kl);

  Rng r2(1);
  auto [again, t2] = train_rl(p, ref, perception_records(), env, opts, r2);
  EXPECT_EQ(again->parameters(), pulled->parameters());
  std::ostringstream s1, s2;
  t1.write_jsonl(s1);
  t2.write_jsonl(s2);
  EXPECT_EQ(s1.str(), s2.str());
}

// Expected J under pi_old by enumerating every group of G sequences, against
// a Monte-Carlo estimate from sampled groups.
TEST(Objective, ExhaustiveMatchesMonteCarlo) {
  constexpr int kLen = 2, kSym = 3, kG = 3;
  Rng init(12);
  const auto old_p = random_tabular(kLen, kSym, init);
  const auto cur = random_tabular(kLen, kSym, init);
  const auto ref = random_tabular(kLen, kSym, init);
  const auto reward = [](const std::vector<int>& s) { return static_cast<double>(s[0] == s[1]) + 0.3 * s[1]; };
  GrpoConfig cfg;
  cfg.group_size = kG;

  std::vector<std::vector<int>> seqs;
  for (int a = 0; a < kSym; ++a)
    for (int b = 0; b < kSym; ++b) seqs.push_back({a, b});
  const auto logp = [&](const std::vector<int>& s) {
    const auto lp = old_p->log_prob({}, s);
    return lp[0] + lp[1];
  };
  const auto j_of = [&](const std::vector<std::vector<int>>& members) {
    std::vector<double> r;
    for (const auto& m : members) r.push_back(reward(m));
    return grpo_objective(group_of(*old_p, members, compute_advantages(r)), *cur, *ref, cfg).value;
  };

  double exact = 0.0;
  const std::size_t n = seqs.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const std::vector<std::vector<int>> m = {seqs[i], seqs[j], seqs[k]};
        exact += std::exp(logp(seqs[i]) + logp(seqs[j]) + logp(seqs[k])) * j_of(m);
      }

  Rng rng(13);
  const int trials = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::vector<int>> m;
    for (int i = 0; i < kG; ++i) m.push_back(old_p->sample({}, rng, false).tokens);
    const double v = j_of(m);
    sum += v;
    sum2 += v * v;
  }
  const double mc = sum / trials;
  const double se = std::sqrt((sum2 / trials - mc * mc) / trials);
  EXPECT_LT(std::abs(mc - exact), 3.0 * se) << "exact " << exact << " mc " << mc << " se " << se;
}

}  // namespace
}  // namespace vadr::grpo
