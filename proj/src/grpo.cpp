// SPDX-License-Identifier: Apache-2.0

#include "vadr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vadr/error.hpp"
#include "vadr/grammar.hpp"

namespace vadr::grpo {

void GrpoConfig::validate() const {
  if (group_size < 2) throw PreconditionError("group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw PreconditionError("clip_epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw PreconditionError("kl_beta must be >= 0");
  if (!(std_floor > 0.0)) throw PreconditionError("std_floor must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw PreconditionError("learning_rate must be finite and >= 0");
  }
  if (steps < 0) throw PreconditionError("steps must be >= 0");
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j, const GrpoConfig& base) {
  GrpoConfig c = base;
  try {
    if (j.contains("group_size")) c.group_size = j.at("group_size").get<int>();
    if (j.contains("clip_epsilon")) c.clip_epsilon = j.at("clip_epsilon").get<double>();
    if (j.contains("kl_beta")) c.kl_beta = j.at("kl_beta").get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("steps")) c.steps = j.at("steps").get<int>();
    if (j.contains("std_floor")) c.std_floor = j.at("std_floor").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("grpo config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json GrpoConfig::to_json() const {
  nlohmann::ordered_json j;
  j["group_size"] = group_size;
  j["clip_epsilon"] = clip_epsilon;
  j["kl_beta"] = kl_beta;
  j["learning_rate"] = learning_rate;
  j["steps"] = steps;
  j["std_floor"] = std_floor;
  j["batch_size"] = batch_size;
  return j;
}

std::vector<double> compute_advantages(const std::vector<double>& r, double std_floor) {
  if (r.size() < 2) throw PreconditionError("advantages need a group of at least 2");
  if (!(std_floor > 0.0)) throw PreconditionError("std_floor must be > 0");
  std::vector<double> a(r.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  if (*lo == *hi) return a;
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  const double denom = std::max(sd, std_floor);
  for (std::size_t i = 0; i < r.size(); ++i) a[i] = (r[i] - mean) / denom;
  return a;
}

double clipped_surrogate(double rho, double a, double eps) noexcept {
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * a, clipped * a);
}

double clipped_surrogate_drho(double rho, double a, double eps) noexcept {
  if (a > 0.0) return rho < 1.0 + eps ? a : 0.0;
  if (a < 0.0) return rho > 1.0 - eps ? a : 0.0;
  return 0.0;
}

ObjectiveTerms grpo_objective(const RolloutGroup& group, const Policy& current, const Policy& ref,
                              const GrpoConfig& cfg, std::vector<double>* grad) {
  const std::size_t g = group.completions.size();
  if (g < 2) throw PreconditionError("rollout group needs at least 2 completions");
  if (group.advantages.size() != g) throw PreconditionError("advantages not populated for the group");
  if (grad) grad->assign(current.parameters().size(), 0.0);

  ObjectiveTerms out;
  const double inv_g = 1.0 / static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i) {
    const auto& c = group.completions[i];
    const auto lp = current.log_prob(group.input, c.tokens);
    if (lp.size() != c.old_logps.size() || lp.empty()) {
      throw PreconditionError("cached and re-evaluated token sequences differ");
    }
    const double inv_t = 1.0 / static_cast<double>(lp.size());
    const double a = group.advantages[i];

    std::vector<double> w_lp(lp.size(), 0.0);
    double surr = 0.0;
    for (std::size_t t = 0; t < lp.size(); ++t) {
      const double rho = std::exp(lp[t] - c.old_logps[t]);
      surr += clipped_surrogate(rho, a, cfg.clip_epsilon);
      w_lp[t] = inv_g * inv_t * clipped_surrogate_drho(rho, a, cfg.clip_epsilon) * rho;
    }
    out.surrogate += inv_g * inv_t * surr;

    double kl_sum = 0.0;
    if (auto exact = current.step_kl(group.input, c.tokens, ref)) {
      for (double k : *exact) kl_sum += k;
      if (grad && cfg.kl_beta > 0.0) {
        const std::vector<double> w(lp.size(), -cfg.kl_beta * inv_g * inv_t);
        current.backprop_step_kl(group.input, c.tokens, ref, w, *grad);
      }
    } else {
      const auto ref_lp = ref.log_prob(group.input, c.tokens);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        const double d = ref_lp[t] - lp[t];
        kl_sum += std::exp(d) - d - 1.0;
        // d/dlogp_new of exp(d) - d - 1 is 1 - exp(d).
        w_lp[t] += -cfg.kl_beta * inv_g * inv_t * (1.0 - std::exp(d));
      }
    }
    out.kl += inv_g * inv_t * kl_sum;
    if (grad) current.backprop_log_prob(group.input, c.tokens, w_lp, *grad);
  }
  out.value = out.surrogate - cfg.kl_beta * out.kl;
  return out;
}

double sft_loss(const Policy& policy, const SftBatch& ex, std::vector<double>* grad) {
  if (ex.targets.empty()) throw PreconditionError("SFT targets must be non-empty");
  const auto lp = policy.log_prob(ex.input, ex.targets);
  double loss = 0.0;
  for (double v : lp) loss -= v;
  if (grad) {
    grad->assign(policy.parameters().size(), 0.0);
    const std::vector<double> w(lp.size(), -1.0);
    policy.backprop_log_prob(ex.input, ex.targets, w, *grad);
  }
  return loss;
}

double finite_diff_check(const std::vector<double>& theta, const ParamLoss& loss, double h) {
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be > 0");
  std::vector<double> analytic;
  const double f0 = loss(theta, &analytic);
  if (!std::isfinite(f0)) throw PreconditionError("loss is not finite at the check point");
  if (analytic.size() != theta.size()) throw PreconditionError("analytic gradient has the wrong size");
  double worst = 0.0;
  std::vector<double> x = theta;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = loss(x, nullptr);
    x[i] = keep - h;
    const double down = loss(x, nullptr);
    x[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(down)) throw PreconditionError("loss is not finite near the point");
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

double finite_diff_check(const Policy& policy, const ParamLoss& loss, double h) {
  return finite_diff_check(policy.parameters(), loss, h);
}

nlohmann::ordered_json TraceRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["mean_reward"] = mean_reward ? nlohmann::ordered_json(*mean_reward) : nullptr;
  if (mean_components) {
    auto c = mean_components->to_json();
    c.erase("total");
    j["mean_components"] = std::move(c);
  } else {
    j["mean_components"] = nullptr;
  }
  j["loss"] = loss;
  j["mean_length"] = mean_length;
  j["kl"] = kl ? nlohmann::ordered_json(*kl) : nullptr;
  return j;
}

void TrainingTrace::write_jsonl(std::ostream& out) const {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

double TrainingTrace::mean_reward(std::size_t first, std::size_t last) const {
  last = std::min(last, records.size());
  if (first >= last) throw PreconditionError("empty trace window");
  double s = 0.0;
  for (std::size_t i = first; i < last; ++i) s += records[i].mean_reward.value_or(0.0);
  return s / static_cast<double>(last - first);
}

std::pair<PolicyPtr, TrainingTrace> train_sft(PolicyPtr policy, const std::vector<SftBatch>& data,
                                              const GrpoConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.empty()) throw PreconditionError("SFT dataset is empty");
  TrainingTrace trace;
  const std::size_t n = policy->parameters().size();
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<double> total(n, 0.0), g;
    double loss = 0.0, length = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& ex = data[uniform_index(rng, data.size())];
      loss += sft_loss(*policy, ex, &g);
      length += static_cast<double>(ex.targets.size());
      for (std::size_t i = 0; i < n; ++i) total[i] += g[i];
    }
    const double inv_b = 1.0 / cfg.batch_size;
    std::vector<double> theta = policy->parameters();
    for (std::size_t i = 0; i < n; ++i) theta[i] -= cfg.learning_rate * inv_b * total[i];
    policy = policy->with_parameters(std::move(theta));

    TraceRecord rec;
    rec.step = step;
    rec.loss = loss * inv_b;
    rec.mean_length = length * inv_b;
    trace.records.push_back(rec);
  }
  return {std::move(policy), std::move(trace)};
}

RolloutGroup rollout_group(const Policy& snapshot, const dataset::QuestionRecord& q, const RolloutEnv& env,
                           oracle::PolicyOracle* verifier, const RlOptions& opts, Rng& rng) {
  RolloutGroup group;
  group.question = q;
  group.input = env.input_for(q);
  const auto& rcfg = opts.rewards;
  const bool verify = verifier != nullptr && uniform01(rng) < rcfg.verification_probability;

  std::vector<double> totals;
  for (int i = 0; i < opts.grpo.group_size; ++i) {
    Completion c;
    auto e = snapshot.sample(group.input, rng, /*greedy=*/false);
    c.tokens = std::move(e.tokens);
    c.old_logps = std::move(e.logps);
    c.text = snapshot.decode(group.input, c.tokens);
    const auto outcome = grammar::parse_response(c.text, env.taxonomy());
    double v = 0.0;
    if (verify && outcome.ok()) {
      v = rewards::verification_reward(outcome.response(), q, env.timeline_for(q), *verifier, env.taxonomy(),
                                       rng, rcfg);
    }
    c.reward = rewards::score_response(outcome, q, rcfg, v);
    totals.push_back(c.reward.total);
    group.completions.push_back(std::move(c));
  }
  group.advantages = compute_advantages(totals, opts.grpo.std_floor);
  return group;
}

std::pair<PolicyPtr, TrainingTrace> train_rl(PolicyPtr policy, PolicyPtr ref,
                                             const std::vector<dataset::QuestionRecord>& records,
                                             const RolloutEnv& env, const RlOptions& opts, Rng& rng) {
  opts.grpo.validate();
  opts.rewards.validate();
  if (records.empty()) throw PreconditionError("RL dataset is empty");
  TrainingTrace trace;
  const std::size_t n = policy->parameters().size();
  const double inv_b = 1.0 / opts.grpo.batch_size;
  for (int step = 0; step < opts.grpo.steps; ++step) {
    std::unique_ptr<oracle::PolicyOracle> own;
    oracle::PolicyOracle* verifier = opts.oracle;
    if (verifier == nullptr) {
      own = env.make_oracle(policy);
      verifier = own.get();
    }
    std::vector<RolloutGroup> groups;
    std::vector<double> total(n, 0.0), grad;
    double kl = 0.0, value = 0.0;
    for (int b = 0; b < opts.grpo.batch_size; ++b) {
      const auto& q = records[uniform_index(rng, records.size())];
      groups.push_back(rollout_group(*policy, q, env, verifier, opts, rng));
      const auto terms = grpo_objective(groups.back(), *policy, *ref, opts.grpo, &grad);
      for (std::size_t i = 0; i < n; ++i) total[i] += grad[i];
      kl += terms.kl;
      value += terms.value;
    }
    std::vector<double> theta = policy->parameters();
    for (std::size_t i = 0; i < n; ++i) theta[i] += opts.grpo.learning_rate * inv_b * total[i];
    policy = policy->with_parameters(std::move(theta));

    TraceRecord rec;
    rec.step = step;
    rewards::RewardBreakdown mean;
    double length = 0.0;
    std::size_t count = 0;
    for (const auto& group : groups) {
      for (const auto& c : group.completions) {
        mean.format += c.reward.format;
        mean.accuracy += c.reward.accuracy;
        mean.depth += c.reward.depth;
        mean.risk += c.reward.risk;
        mean.verification += c.reward.verification;
        mean.total += c.reward.total;
        length += static_cast<double>(c.tokens.size());
        ++count;
      }
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (double* f : {&mean.format, &mean.accuracy, &mean.depth, &mean.risk, &mean.verification, &mean.total}) {
      *f *= inv;
    }
    rec.mean_reward = mean.total;
    rec.mean_components = mean;
    rec.loss = -value * inv_b;
    rec.mean_length = length * inv;
    rec.kl = kl * inv_b;
    if (opts.on_step) opts.on_step(rec);
    trace.records.push_back(rec);
  }
  return {std::move(policy), std::move(trace)};
}

}  // namespace vadr::grpo
