// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vadr/dataset.hpp"
#include "vadr/oracle.hpp"
#include "vadr/policy.hpp"
#include "vadr/rewards.hpp"

namespace vadr::grpo {

struct GrpoConfig {
  int group_size = 4;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double learning_rate = 0.1;
  int steps = 500;
  double std_floor = 1e-8;
  /// Examples per SFT step; RL uses one question per step.
  int batch_size = 1;

  void validate() const;  // throws PreconditionError
  static GrpoConfig from_json(const nlohmann::json& j, const GrpoConfig& base);
  nlohmann::ordered_json to_json() const;
};

/// (r - mean) / max(std, floor) with population std; all zeros when every
/// reward is equal.
/// Throws PreconditionError for fewer than two rewards.
std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_floor = 1e-8);

struct Completion {
  std::vector<int> tokens;
  std::vector<double> old_logps;  // cached at rollout time
  std::string text;
  rewards::RewardBreakdown reward;
};

struct RolloutGroup {
  dataset::QuestionRecord question;
  PolicyInput input;
  std::vector<Completion> completions;
  std::vector<double> advantages;
};

/// Per-token clipped surrogate min(rho*A, clip(rho, 1-eps, 1+eps)*A).
double clipped_surrogate(double rho, double advantage, double eps) noexcept;
/// Its derivative with respect to rho (0 wherever the clipped branch is active).
double clipped_surrogate_drho(double rho, double advantage, double eps) noexcept;

struct ObjectiveTerms {
  double value = 0.0;      // J
  double surrogate = 0.0;  // first term of J
  double kl = 0.0;         // mean per-token KL to the reference
};

/// J = (1/G) sum_i mean_t surrogate_{i,t} - beta * mean_{i,t} KL_{i,t}.
/// Old log-probs come from the group cache. KL is exact when `current` and
/// `ref` are comparable log-linear policies, else the exp(d)-d-1 estimator
/// with d = logp_ref - logp_new. When `grad` is given it receives dJ/dtheta.
ObjectiveTerms grpo_objective(const RolloutGroup& group, const Policy& current, const Policy& ref,
                              const GrpoConfig& cfg, std::vector<double>* grad = nullptr);

struct SftBatch {
  PolicyInput input;
  std::vector<int> targets;
};

/// -sum_t log p(y_t | y_<t, x); grad (if given) receives its gradient.
double sft_loss(const Policy& policy, const SftBatch& example, std::vector<double>* grad = nullptr);

/// Loss over a flat parameter vector; fills `grad` with the analytic gradient
/// when non-null.
using ParamLoss = std::function<double(const std::vector<double>& theta, std::vector<double>* grad)>;

/// max_i |g_fd,i - g_an,i| / max(1, |g_an,i|) with central differences.
double finite_diff_check(const std::vector<double>& theta, const ParamLoss& loss, double h = 1e-6);
double finite_diff_check(const Policy& policy, const ParamLoss& loss, double h = 1e-6);

struct TraceRecord {
  int step = 0;
  std::optional<double> mean_reward;
  std::optional<rewards::RewardBreakdown> mean_components;
  double loss = 0.0;
  double mean_length = 0.0;  // tokens per completion or target
  std::optional<double> kl;

  nlohmann::ordered_json to_json() const;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  void write_jsonl(std::ostream& out) const;
  /// Mean of mean_reward over records [first, last).
  double mean_reward(std::size_t first, std::size_t last) const;
};

/// Gradient descent on the mean SFT loss of minibatches drawn with
/// replacement. Throws PreconditionError on empty data.
std::pair<PolicyPtr, TrainingTrace> train_sft(PolicyPtr policy, const std::vector<SftBatch>& data,
                                              const GrpoConfig& cfg, Rng& rng);

/// What the RL loop needs from a world: policy inputs and timelines for
/// records, a way to parse replies, and an in-process oracle for a snapshot.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual PolicyInput input_for(const dataset::QuestionRecord& q) const = 0;
  virtual const VideoTimeline& timeline_for(const dataset::QuestionRecord& q) const = 0;
  virtual const Taxonomy& taxonomy() const = 0;
  virtual std::unique_ptr<oracle::PolicyOracle> make_oracle(PolicyPtr snapshot) const = 0;
};

struct RlOptions {
  rewards::RewardConfig rewards;
  GrpoConfig grpo;
  /// Re-query target for verification; null uses env.make_oracle(current).
  oracle::PolicyOracle* oracle = nullptr;
  /// Called after each step (for progress output); may be empty.
  std::function<void(const TraceRecord&)> on_step;
};

/// Builds one scored rollout group from `snapshot` (sampling, parsing,
/// rewards, verification, advantages).
RolloutGroup rollout_group(const Policy& snapshot, const dataset::QuestionRecord& q, const RolloutEnv& env,
                           oracle::PolicyOracle* verifier, const RlOptions& opts, Rng& rng);

/// Per step: draw batch_size records, roll out G completions for each from the
/// current snapshot (which becomes pi_old), score, normalize, and take one
/// ascent step on the batch-mean J.
std::pair<PolicyPtr, TrainingTrace> train_rl(PolicyPtr policy, PolicyPtr ref,
                                             const std::vector<dataset::QuestionRecord>& records,
                                             const RolloutEnv& env, const RlOptions& opts, Rng& rng);

}  // namespace vadr::grpo
