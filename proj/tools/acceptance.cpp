// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: runs each primary criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support/generators.hpp"
#include "vadr/error.hpp"
#include "vadr/grpo.hpp"
#include "vadr/metrics.hpp"
#include "vadr/rewards.hpp"
#include "vadr/sim.hpp"

namespace {

using namespace vadr;
using Clock = std::chrono::steady_clock;

const Taxonomy& tax() { return Taxonomy::builtin(); }
const dataset::TemplateLibrary& lib() { return dataset::TemplateLibrary::builtin(); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Collects sub-check failures for one criterion.
struct Checks {
  std::vector<std::string> failed;
  void require(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
};

struct Result {
  bool pass;
  std::string detail;
};

Result finish(const Checks& c, const std::string& summary) {
  if (c.failed.empty()) return {true, summary};
  std::string d = summary + "; failed:";
  for (std::size_t i = 0; i < c.failed.size() && i < 5; ++i) d += " [" + c.failed[i] + "]";
  if (c.failed.size() > 5) d += " (+" + std::to_string(c.failed.size() - 5) + " more)";
  return {false, d};
}

std::shared_ptr<const sim::ToyPolicy> random_toy(Rng& rng, double scale) {
  std::vector<double> th(sim::ToyPolicy::parameter_count(tax()));
  for (auto& v : th) v = scale * (2.0 * uniform01(rng) - 1.0);
  return std::make_shared<sim::ToyPolicy>(tax(), lib(), std::move(th));
}

sim::Corpus small_corpus(std::uint64_t seed) {
  return sim::generate_corpus(sim::CorpusSpec::uniform(tax(), 1, 8, seed), tax(), lib());
}

// 1. Gradient fidelity.
Result gradient_fidelity() {
  const auto t0 = Clock::now();
  Checks c;
  const auto corpus = small_corpus(101);
  const auto env = sim::SimEnv::from_corpus(tax(), corpus);
  Rng rng(1);
  const auto base = random_toy(rng, 0.5);
  const auto sft_recs = sim::filter_split(corpus.records, dataset::Split::Sft);
  const auto batches = sim::make_sft_batches(sft_recs, env, *base);
  grpo::GrpoConfig cfg;
  cfg.kl_beta = 0.04;
  cfg.clip_epsilon = 0.2;

  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = random_toy(rng, 0.5);
    const auto& ex = batches[uniform_index(rng, batches.size())];
    const grpo::ParamLoss sft = [&](const std::vector<double>& th, std::vector<double>* g) {
      return grpo::sft_loss(*p->with_parameters(th), ex, g);
    };
    worst = std::max(worst, grpo::finite_diff_check(*p, sft, 1e-6));

    const auto old_p = random_toy(rng, 0.5);
    const auto ref = random_toy(rng, 0.5);
    grpo::RolloutGroup g;
    g.input = env.input_for(corpus.records[uniform_index(rng, corpus.records.size())]);
    std::vector<double> r;
    for (int i = 0; i < 4; ++i) {
      grpo::Completion comp;
      comp.tokens = old_p->sample(g.input, rng, false).tokens;
      comp.old_logps = old_p->log_prob(g.input, comp.tokens);
      g.completions.push_back(comp);
      r.push_back(uniform01(rng));
    }
    g.advantages = grpo::compute_advantages(r);
    const grpo::ParamLoss obj = [&](const std::vector<double>& th, std::vector<double>* grad) {
      return grpo::grpo_objective(g, *p->with_parameters(th), *ref, cfg, grad).value;
    };
    worst = std::max(worst, grpo::finite_diff_check(*p, obj, 1e-6));
  }
  const double secs = seconds_since(t0);
  const std::size_t n = base->parameters().size();
  c.require(n >= 50, "policy has fewer than 50 parameters");
  c.require(worst < 1e-5, "max relative error " + fmt("%.3g", worst));
  c.require(secs < 60.0, "runtime " + fmt("%.1f s", secs));
  return finish(c, std::to_string(n) + " parameters, max rel err " + fmt("%.2e", worst) + ", " +
                       fmt("%.2f s", secs));
}

// 2. Advantage normalization properties.
Result advantage_properties() {
  Checks c;
  Rng rng(2);
  int zero_groups = 0;
  double worst_mean = 0.0, worst_std = 0.0, worst_inv = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = 2 + uniform_index(rng, 7);
    std::vector<double> r(g);
    const bool flat = trial % 10 == 0;
    const double level = 4.0 * uniform01(rng) - 2.0;
    for (auto& v : r) v = flat ? level : 6.0 * uniform01(rng) - 3.0;
    const auto a = grpo::compute_advantages(r);

    double m = 0.0, s = 0.0, mr = 0.0, sr = 0.0;
    for (double x : r) mr += x;
    mr /= static_cast<double>(g);
    for (double x : r) sr += (x - mr) * (x - mr);
    sr = std::sqrt(sr / static_cast<double>(g));
    for (double x : a) m += x;
    m /= static_cast<double>(g);
    for (double x : a) s += (x - m) * (x - m);
    s = std::sqrt(s / static_cast<double>(g));

    if (flat) {
      ++zero_groups;
      for (double x : a) c.require(x == 0.0, "zero-variance group gave a nonzero advantage");
      continue;
    }
    if (sr > 1e-6) {
      worst_mean = std::max(worst_mean, std::abs(m));
      worst_std = std::max(worst_std, std::abs(s - 1.0));
    }
    const double shift = 10.0 * uniform01(rng) - 5.0;
    const double scale = 0.01 + 10.0 * uniform01(rng);
    std::vector<double> rs(r), rk(r);
    for (std::size_t i = 0; i < g; ++i) {
      rs[i] += shift;
      rk[i] *= scale;
    }
    const auto as = grpo::compute_advantages(rs);
    const auto ak = grpo::compute_advantages(rk);
    for (std::size_t i = 0; i < g; ++i) {
      worst_inv = std::max({worst_inv, std::abs(as[i] - a[i]), std::abs(ak[i] - a[i])});
    }
  }
  c.require(worst_mean < 1e-9, "|mean(A)| " + fmt("%.3g", worst_mean));
  c.require(worst_std < 1e-9, "|std(A)-1| " + fmt("%.3g", worst_std));
  c.require(worst_inv < 1e-9, "shift/scale deviation " + fmt("%.3g", worst_inv));
  return finish(c, "1000 groups (" + std::to_string(zero_groups) + " flat), |mean| " + fmt("%.1e", worst_mean) +
                       ", |std-1| " + fmt("%.1e", worst_std) + ", invariance dev " + fmt("%.1e", worst_inv));
}

// 3. Clipped objective mechanics, KL, exhaustive vs Monte-Carlo.
Result objective_mechanics() {
  Checks c;
  const double eps = 0.2, h = 1e-6;
  for (double a : {-2.0, -0.5, 0.5, 2.0}) {
    for (double rho : {0.3, 0.6, 0.79, 1.21, 1.5, 3.0}) {
      const bool outside = (a > 0 && rho > 1 + eps) || (a < 0 && rho < 1 - eps);
      const double v = grpo::clipped_surrogate(rho, a, eps);
      const double fd = (grpo::clipped_surrogate(rho + h, a, eps) - grpo::clipped_surrogate(rho - h, a, eps)) / (2 * h);
      if (outside) {
        const double bound = (a > 0 ? 1 + eps : 1 - eps) * a;
        c.require(v == bound, "clipped value at rho " + fmt("%g", rho));
        c.require(std::abs(fd) < 1e-9, "nonzero fd slope at rho " + fmt("%g", rho));
        c.require(grpo::clipped_surrogate_drho(rho, a, eps) == 0.0, "nonzero analytic slope");
      } else {
        c.require(std::abs(fd - grpo::clipped_surrogate_drho(rho, a, eps)) < 1e-6, "slope at rho " + fmt("%g", rho));
      }
    }
  }

  const auto corpus = small_corpus(103);
  const auto env = sim::SimEnv::from_corpus(tax(), corpus);
  Rng rng(3);
  double min_kl = 0.0, max_self = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_toy(rng, 2.0);
    const auto q = random_toy(rng, 2.0);
    const auto in = env.input_for(corpus.records[uniform_index(rng, corpus.records.size())]);
    const auto toks = p->sample(in, rng, false).tokens;
    const auto self = p->step_kl(in, toks, *p);
    const auto other = p->step_kl(in, toks, *q);
    if (!self || !other) {
      c.require(false, "exact KL unavailable");
      break;
    }
    for (double k : *self) max_self = std::max(max_self, std::abs(k));
    for (double k : *other) min_kl = std::min(min_kl, k);
  }
  c.require(max_self == 0.0, "KL(p,p) " + fmt("%.3g", max_self));
  c.require(min_kl >= 0.0, "negative KL " + fmt("%.3g", min_kl));

  // 2-token, 3-symbol policy, groups of 3: 9^3 joint outcomes.
  std::vector<double> th(TabularSequencePolicy::parameter_count(2, 3));
  const auto draw = [&] {
    for (auto& v : th) v = 2.0 * uniform01(rng) - 1.0;
    return std::make_shared<TabularSequencePolicy>(2, 3, th);
  };
  const auto old_p = draw(), cur = draw(), ref = draw();
  grpo::GrpoConfig cfg;
  cfg.group_size = 3;
  const auto reward = [](const std::vector<int>& s) { return static_cast<double>(s[0] == s[1]) + 0.3 * s[1]; };
  const auto objective = [&](const std::vector<std::vector<int>>& seqs) {
    grpo::RolloutGroup g;
    std::vector<double> r;
    for (const auto& s : seqs) {
      grpo::Completion comp;
      comp.tokens = s;
      comp.old_logps = old_p->log_prob({}, s);
      g.completions.push_back(comp);
      r.push_back(reward(s));
    }
    g.advantages = grpo::compute_advantages(r);
    return grpo::grpo_objective(g, *cur, *ref, cfg).value;
  };
  std::vector<std::vector<int>> all;
  std::vector<double> prob;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      all.push_back({a, b});
      const auto lp = old_p->log_prob({}, all.back());
      prob.push_back(std::exp(lp[0] + lp[1]));
    }
  }
  double exact = 0.0;
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      for (std::size_t k = 0; k < 9; ++k) exact += prob[i] * prob[j] * prob[k] * objective({all[i], all[j], all[k]});
  double sum = 0.0, sum2 = 0.0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    std::vector<std::vector<int>> seqs;
    for (int i = 0; i < 3; ++i) seqs.push_back(old_p->sample({}, rng, false).tokens);
    const double v = objective(seqs);
    sum += v;
    sum2 += v * v;
  }
  const double mc = sum / n;
  const double se = std::sqrt((sum2 / n - mc * mc) / n);
  const double z = std::abs(mc - exact) / se;
  c.require(z < 3.0, "exhaustive vs MC z " + fmt("%.2f", z));
  return finish(c, "clip checks ok, 1000 KL pairs (min " + fmt("%.1e", min_kl) + "), E[J] " + fmt("%.5f", exact) +
                       " vs MC " + fmt("%.5f", mc) + " (z " + fmt("%.2f", z) + ")");
}

// 4. Grammar round-trip, fuzzing, named error classes.
Result grammar_checks() {
  Checks c;
  Rng rng(4);
  int round_trips = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto r = testing::random_response(rng, tax());
    const auto text = grammar::render_response(r);
    const auto back = grammar::parse_response(text, tax());
    if (back.ok() && back.response() == r && grammar::render_response(back.response()) == text) {
      ++round_trips;
    } else if (c.failed.size() < 5) {
      c.require(false, "round trip: " + text.substr(0, 60));
    }
  }
  c.require(round_trips == 10000, std::to_string(10000 - round_trips) + " round-trip failures");

  const std::set<grammar::ParseErrorClass> known = {
      grammar::ParseErrorClass::TagMismatch, grammar::ParseErrorClass::StageOrdering,
      grammar::ParseErrorClass::MissingAnswer, grammar::ParseErrorClass::BadInterval,
      grammar::ParseErrorClass::BadRisk, grammar::ParseErrorClass::UnknownCategory,
      grammar::ParseErrorClass::DuplicateStage};
  int crashes = 0, unclassified = 0, accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto raw = testing::fuzz_input(rng, tax(), 4096, i);
    try {
      const auto out = grammar::parse_response(raw, tax());
      if (out.ok()) {
        ++accepted;
        grammar::check_invariants(out.response());
      } else if (!known.count(out.error().kind) || out.error().offset > raw.size()) {
        ++unclassified;
      }
    } catch (...) {
      ++crashes;
    }
  }
  c.require(crashes == 0, std::to_string(crashes) + " fuzz inputs threw");
  c.require(unclassified == 0, std::to_string(unclassified) + " unclassified errors");

  const auto expect_error = [&](const char* raw, grammar::ParseErrorClass want, const char* name) {
    const auto out = grammar::parse_response(raw, tax());
    c.require(!out.ok() && out.error().kind == want, std::string(name) + " not rejected as expected");
  };
  expect_error("<think><action>a</action><perception>p</perception></think><answer>x</answer>",
               grammar::ParseErrorClass::StageOrdering, "stage ordering");
  expect_error("<think><cognition><which>Fighting</which><when>0.6,0.2</when></cognition></think><answer>x</answer>",
               grammar::ParseErrorClass::BadInterval, "reversed interval");
  expect_error("<think><cognition><which>Fighting</which><when>0.2,1.4</when></cognition></think><answer>x</answer>",
               grammar::ParseErrorClass::BadInterval, "out-of-range interval");
  expect_error("<think><action>a<risk>Extreme</risk></action></think><answer>x</answer>",
               grammar::ParseErrorClass::BadRisk, "risk level");
  return finish(c, std::to_string(round_trips) + "/10000 round trips, 100000 fuzz inputs (" +
                       std::to_string(accepted) + " parsed, " + std::to_string(crashes) + " threw, " +
                       std::to_string(unclassified) + " unclassified), named errors checked");
}

class ScriptedOracle final : public oracle::PolicyOracle {
 public:
  explicit ScriptedOracle(std::string category) : category_(std::move(category)) {}
  std::string query(const VideoTimeline&, const dataset::QuestionRecord&, bool) override {
    if (category_ == "normal") {
      return "<think><cognition>c<which>normal</which></cognition></think><answer>x</answer>";
    }
    return "<think><cognition>c<which>" + category_ + "</which><when>0.1,0.4</when></cognition></think>"
           "<answer>x</answer>";
  }

 private:
  std::string category_;
};

// 5. Reward protocol.
Result reward_protocol() {
  Checks c;
  const rewards::RewardConfig cfg;
  dataset::QuestionRecord q;
  q.id = "s1";
  q.video_id = "v";
  q.kind = QuestionKind::ActionOpen;
  q.question = "What should be done?";
  q.reference_answer = "a fight starts";
  q.gold_category = "Fighting";
  q.gold_interval = TemporalInterval(0.2, 0.6);
  q.gold_risk = RiskLevel::High;

  std::vector<std::string> tokens;
  for (int i = 0; i < 10; ++i) tokens.push_back("f" + std::to_string(i));
  const auto video = VideoTimeline::uniform(tokens);
  const auto judged = [](std::string cat, std::optional<TemporalInterval> iv) {
    grammar::StructuredResponse r;
    r.stages = {{StageKind::Cognition, "c"}};
    r.judgment = grammar::AnomalyJudgment{std::move(cat), iv};
    r.answer = "x";
    return r;
  };
  Rng rng(5);
  ScriptedOracle says_normal("normal"), says_fighting("Fighting");
  const double table[4] = {
      rewards::verification_reward(judged("Fighting", TemporalInterval(0.2, 0.6)), q, video, says_normal, tax(), rng,
                                   cfg),
      rewards::verification_reward(judged("Fighting", TemporalInterval(0.2, 0.6)), q, video, says_fighting, tax(),
                                   rng, cfg),
      rewards::verification_reward(judged("normal", std::nullopt), q, video, says_fighting, tax(), rng, cfg),
      rewards::verification_reward(judged("normal", std::nullopt), q, video, says_normal, tax(), rng, cfg),
  };
  c.require(table[0] == 1.0 && table[1] == 0.0 && table[2] == -1.0 && table[3] == 0.0,
            "verification table " + fmt("%g", table[0]) + "," + fmt("%g", table[1]) + "," + fmt("%g", table[2]) +
                "," + fmt("%g", table[3]));

  for (int e = 1; e <= 3; ++e) {
    for (int p = 0; p <= 3; ++p) {
      const double v = rewards::depth_reward(p, e, true, cfg);
      const double best = rewards::depth_reward(e, e, true, cfg);
      c.require(p == e ? v == best : v < best, "depth maximum not unique at expected " + std::to_string(e));
    }
  }
  for (int g = 0; g < 3; ++g) {
    const auto gold = static_cast<RiskLevel>(g);
    std::map<int, double> by_distance;
    for (int p = 0; p < 3; ++p) {
      const auto pred = static_cast<RiskLevel>(p);
      by_distance[risk_distance(pred, gold)] = rewards::risk_reward(pred, gold, cfg);
    }
    for (auto it = by_distance.begin(); std::next(it) != by_distance.end(); ++it) {
      c.require(it->second > std::next(it)->second, "risk reward not strictly decreasing");
    }
  }

  const auto near = [&](double got, double want, const char* what) {
    c.require(std::abs(got - want) <= 1e-9, std::string(what) + " = " + fmt("%.12g", got));
  };
  const auto parse = [](const char* raw) { return grammar::parse_response(raw, tax()); };
  near(rewards::format_reward(parse("<think><perception>p</perception><cognition>c</cognition></think>"
                                    "<answer>B</answer>")),
       1.0, "format valid");
  near(rewards::format_reward(parse("<think><perception>p</think><answer>B</answer>")), 0.0, "format invalid");
  near(rewards::token_f1("a fight breaks out", "a fight starts"), 4.0 / 7.0, "token F1");
  near(rewards::depth_reward(3, 3, true, cfg), 1.0, "depth (3,3)");
  near(rewards::depth_reward(1, 3, true, cfg), 0.0, "depth (1,3)");
  near(rewards::depth_reward(2, 2, false, cfg), 0.0, "depth invalid");
  near(rewards::risk_reward(RiskLevel::High, RiskLevel::High, cfg), 1.0, "risk (High,High)");
  near(rewards::risk_reward(RiskLevel::Medium, RiskLevel::High, cfg), 0.3, "risk (Medium,High)");
  near(rewards::risk_reward(RiskLevel::Low, RiskLevel::High, cfg), -0.5, "risk (Low,High)");
  near(rewards::total_reward({}, cfg), 0.0, "total zero");
  near(rewards::total_reward({1, 1, 1, 1, 1, 0}, cfg), 5.0, "total all ones");
  near(rewards::total_reward({1, 0.5714, 1, 0.3, 0, 0}, cfg), 2.8714, "total mixed");

  const auto frames = [](std::vector<double> ts) {
    std::vector<Frame> f;
    for (std::size_t i = 0; i < ts.size(); ++i) f.push_back({"f" + std::to_string(i), ts[i]});
    return VideoTimeline(std::move(f));
  };
  const auto kept = [](const VideoTimeline& t) {
    std::string s;
    for (const auto& f : t.frames()) s += f.token;
    return s;
  };
  const auto five = frames({0.1, 0.3, 0.5, 0.7, 0.9});
  c.require(kept(excise_interval(five, TemporalInterval(0.25, 0.65))) == "f0f3f4", "excise [0.25,0.65]");
  c.require(kept(excise_interval(frames({0.1, 0.3, 0.5}), TemporalInterval(0.3, 0.3))) == "f0f2", "zero width");
  c.require(kept(excise_boundary(five, Boundary::Head, 0.25)) == "f1f2f3f4", "head 0.25");
  c.require(kept(excise_boundary(five, Boundary::Tail, 0.25)) == "f0f1f2f3", "tail 0.25");
  bool empty_thrown = false, fraction_thrown = false;
  try {
    excise_interval(five, TemporalInterval(0.0, 1.0));
  } catch (const EmptyTimeline&) {
    empty_thrown = true;
  }
  try {
    excise_boundary(five, Boundary::Head, 0.6);
  } catch (const PreconditionError&) {
    fraction_thrown = true;
  }
  c.require(empty_thrown, "full excision did not raise EmptyTimeline");
  c.require(fraction_thrown, "fraction 0.6 accepted");
  return finish(c, "verification table {" + fmt("%+g", table[0]) + "," + fmt("%g", table[1]) + "," +
                       fmt("%+g", table[2]) + "," + fmt("%g", table[3]) + "}, depth/risk schedules, worked examples");
}

// 6. Desk-scale pipeline.
Result desk_pipeline() {
  const auto t0 = Clock::now();
  Checks c;
  const std::uint64_t seed = 0;
  const auto corpus = sim::generate_corpus(sim::CorpusSpec::uniform(tax(), 4, 52, seed), tax(), lib());
  const auto env = sim::SimEnv::from_corpus(tax(), corpus);
  const auto init = std::make_shared<sim::ToyPolicy>(tax(), lib());
  const auto sft_recs = sim::filter_split(corpus.records, dataset::Split::Sft);
  const auto rl_recs = sim::filter_split(corpus.records, dataset::Split::Rl);
  const auto test_recs = sim::filter_split(corpus.records, dataset::Split::Test);

  Rng sft_rng(seed);
  auto [sft_policy, sft_trace] = grpo::train_sft(init, sim::make_sft_batches(sft_recs, env, *init),
                                                 sim::desk_sft_config(), sft_rng);
  grpo::RlOptions opts;
  opts.grpo = sim::desk_rl_config();
  Rng rl_rng(seed);
  auto [rl_policy, trace] = grpo::train_rl(sft_policy, sft_policy, rl_recs, env, opts, rl_rng);
  Rng only_rng(seed);
  auto [only_policy, only_trace] = grpo::train_rl(init, init, rl_recs, env, opts, only_rng);
  (void)only_policy;

  const auto responses = sim::greedy_responses(*rl_policy, test_recs, env);
  std::vector<eval::EvalRecord> ev;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    ev.push_back(eval::make_eval_record(test_recs[i], responses[i], tax()));
  }
  const auto stage = eval::stage_report(ev, nullptr);
  const double risk_acc = stage.risk_accuracy.value_or(0.0);
  const double depth = eval::depth_alignment(ev);

  const std::size_t steps = trace.records.size();
  const double first = trace.mean_reward(0, 50);
  const double last = trace.mean_reward(steps - 50, steps);
  const double gain = last / first - 1.0;
  const std::size_t only_steps = only_trace.records.size();
  const double only_last = only_trace.mean_reward(only_steps - 50, only_steps);
  const double secs = seconds_since(t0);

  c.require(corpus.videos.size() == 200, std::to_string(corpus.videos.size()) + " videos");
  c.require(sft_trace.records.size() == 300 && steps == 500 && opts.grpo.group_size == 4, "schedule");
  c.require(first > 0.0 && gain >= 0.25, "gain " + fmt("%.1f%%", 100.0 * gain));
  c.require(risk_acc >= 0.9, "held-out risk accuracy " + fmt("%.3f", risk_acc));
  c.require(depth >= 0.9, "held-out depth alignment " + fmt("%.3f", depth));
  c.require(last > only_last, "SFT-initialized " + fmt("%.3f", last) + " vs RL-only " + fmt("%.3f", only_last));
  c.require(secs < 300.0, "runtime " + fmt("%.1f s", secs));
  return finish(c, "reward first-50 " + fmt("%.3f", first) + " -> last-50 " + fmt("%.3f", last) + " (" +
                       fmt("%+.1f%%", 100.0 * gain) + "), held-out risk " + fmt("%.3f", risk_acc) + ", depth " +
                       fmt("%.3f", depth) + ", RL-only last-50 " + fmt("%.3f", only_last) + ", " +
                       fmt("%.1f s", secs));
}

// 7. Metrics.
Result metrics_checks() {
  Checks c;
  struct Case {
    const char* metric;
    const char* cand;
    const char* ref;
    double want;
  };
  // Independent values from tests/oracles/lexical_oracle.py.
  const Case cases[] = {
      {"bleu1", "the cat sat", "the cat sat down", 0.716531310574},
      {"bleu4", "the cat sat on the mat", "the cat is on the mat", 0.485491771707},
      {"bleu2", "a fight breaks out near the door", "a fight starts near the door", 0.638876565000},
      {"rouge2_f1", "a b c", "a b d", 0.5},
      {"rouge2_p", "the man runs across the road", "a man runs across a busy road", 0.4},
      {"rougeL_f1", "the man runs across the road", "a man runs across a busy road", 0.615384615385},
      {"rougeL_r", "police arrive after the crash", "after the crash police arrive", 0.6},
      {"meteor", "a b", "a b", 0.9375},
      {"meteor", "the cat sat on the mat", "on the mat the cat sat", 0.710648148148},
      {"meteor", "a person falls down the stairs", "someone falls down stairs", 0.608465608466},
  };
  double worst = 0.0;
  for (const auto& k : cases) {
    const std::string m = k.metric;
    double got;
    if (m == "bleu1") got = eval::bleu(k.cand, k.ref, 1);
    else if (m == "bleu2") got = eval::bleu(k.cand, k.ref, 2);
    else if (m == "bleu4") got = eval::bleu(k.cand, k.ref, 4);
    else if (m == "rouge2_f1") got = eval::rouge(k.cand, k.ref, eval::RougeVariant::N2).f1;
    else if (m == "rouge2_p") got = eval::rouge(k.cand, k.ref, eval::RougeVariant::N2).precision;
    else if (m == "rougeL_f1") got = eval::rouge(k.cand, k.ref, eval::RougeVariant::L).f1;
    else if (m == "rougeL_r") got = eval::rouge(k.cand, k.ref, eval::RougeVariant::L).recall;
    else got = eval::meteor_basic(k.cand, k.ref);
    worst = std::max(worst, std::abs(got - k.want));
    c.require(std::abs(got - k.want) <= 1e-6, m + " on \"" + k.cand + "\" = " + fmt("%.9f", got));
  }

  Rng rng(7);
  double worst_sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<eval::JointInput> in(1 + uniform_index(rng, 64));
    for (auto& x : in) x = {uniform_index(rng, 2) == 1, uniform_index(rng, 2) == 1, uniform_index(rng, 2) == 1};
    const auto rep = eval::joint_outcomes(in);
    worst_sum = std::max(worst_sum, std::abs(rep.rr + rep.rw + rep.wr + rep.ww - 1.0));
    c.require(*rep.rrr <= rep.rr && *rep.www <= rep.ww, "triple outcome exceeds its double");
  }
  c.require(worst_sum <= 1e-12, "partition deviation " + fmt("%.3g", worst_sum));

  std::vector<eval::JointInput> in;
  const auto add = [&](int n, bool r, bool a, bool k) {
    for (int i = 0; i < n; ++i) in.push_back({r, a, k});
  };
  add(467, true, true, true);
  add(104, true, true, false);
  add(252, true, false, true);
  add(87, false, true, true);
  add(21, false, false, true);
  add(69, false, false, false);
  const auto rep = eval::joint_outcomes(in);
  double rendered_sum = 0.0;
  std::string row = rep.row();
  for (std::size_t at = 0; at <= row.size();) {
    const auto slash = row.find('/', at);
    rendered_sum += std::stod(row.substr(at, slash - at));
    if (slash == std::string::npos) break;
    at = slash + 1;
  }
  const std::string total = fmt("%.3f", rendered_sum);
  c.require(row == "0.571/0.252/0.087/0.090", "row " + row);
  c.require(total == "1.000", "rendered sum " + total);
  c.require(fmt("%.3f", *rep.rrr) == "0.467" && fmt("%.3f", *rep.www) == "0.069", "triple outcomes");
  return finish(c, "10 lexical fixtures (max dev " + fmt("%.1e", worst) + "), partition dev " +
                       fmt("%.1e", worst_sum) + ", row " + row + " sums to " + total);
}

// 8. Dataset.
Result dataset_checks(const std::filesystem::path& fixtures) {
  Checks c;
  std::size_t golden = 0;
  try {
    golden = dataset::load_records(fixtures / "golden_records.jsonl", tax()).size();
  } catch (const std::exception& e) {
    c.require(false, std::string("golden rejected: ") + e.what());
  }
  const std::map<std::string, std::string> violations = {
      {"duplicate_id", "DuplicateId"},
      {"unknown_category", "UnknownCategory"},
      {"interval_start_after_end", "BadInterval"},
      {"sft_missing_cot", "CotMismatch"},
      {"mcq_missing_gold_letter", "MissingGoldLetter"},
      {"open_with_choices", "UnexpectedChoices"},
      {"risk_on_non_action", "RiskMismatch"},
      {"abnormal_missing_interval", "IntervalMismatch"}};
  int rejected = 0;
  for (const auto& [file, code] : violations) {
    try {
      dataset::load_records(fixtures / "violations" / (file + ".jsonl"), tax());
      c.require(false, file + " accepted");
    } catch (const ValidationError& e) {
      if (e.code() == code) {
        ++rejected;
      } else {
        c.require(false, file + " rejected as " + e.code());
      }
    }
  }

  Rng rng(8);
  std::map<char, int> hits;
  int per_video_ok = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const bool normal = t % 5 == 0;
    const auto cat = normal ? std::string("normal") : tax().label_of(1 + uniform_index(rng, Taxonomy::kLeafCount));
    dataset::VideoMeta meta{"v" + std::to_string(t), cat,
                            normal ? std::nullopt : std::optional(TemporalInterval(0.2, 0.6)), std::nullopt,
                            static_cast<dataset::Split>(uniform_index(rng, 3))};
    const auto qs = dataset::instantiate_questions(meta, lib(), tax(), rng);
    std::set<QuestionKind> kinds;
    for (const auto& q : qs) kinds.insert(q.kind);
    if (qs.size() == 6 && kinds.size() == 6) ++per_video_ok;
    for (const auto& q : qs) {
      if (q.kind == QuestionKind::PerceptionMCQ && q.gold_letter) ++hits[*q.gold_letter];
    }
  }
  c.require(golden == 12, "golden records " + std::to_string(golden));
  c.require(per_video_ok == trials, std::to_string(trials - per_video_ok) + " videos without 6 questions");
  std::string freqs;
  for (char l : {'A', 'B', 'C', 'D'}) {
    const double f = static_cast<double>(hits[l]) / trials;
    c.require(std::abs(f - 0.25) <= 0.02, std::string(1, l) + " frequency " + fmt("%.4f", f));
    freqs += (freqs.empty() ? "" : "/") + fmt("%.3f", f);
  }
  return finish(c, "golden " + std::to_string(golden) + " records accepted, " + std::to_string(rejected) +
                       "/8 violations named, 6 questions per video, letter freqs " + freqs);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path fixtures = argc > 1 ? argv[1] : VADR_FIXTURES;
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"advantage properties", advantage_properties},
      {"objective mechanics", objective_mechanics},
      {"grammar", grammar_checks},
      {"reward protocol", reward_protocol},
      {"desk-scale pipeline", desk_pipeline},
      {"metrics", metrics_checks},
      {"dataset", [&] { return dataset_checks(fixtures); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::printf("criterion %zu %-22s %s  %s\n", i + 1, criteria[i].first, r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
