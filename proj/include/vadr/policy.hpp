// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vadr/dataset.hpp"
#include "vadr/rng.hpp"
#include "vadr/timeline.hpp"

namespace vadr {

/// Symbol tally over the frames a policy was shown.
struct FeatureVector {
  std::map<std::string, int> counts;
  int n_sampled = 0;
  /// The sampled frames themselves, in time order.
  std::vector<Frame> samples;

  bool operator==(const FeatureVector&) const = default;
};

/// What a policy conditions on: the observation plus the question.
struct PolicyInput {
  FeatureVector features;
  QuestionKind kind = QuestionKind::PerceptionMCQ;
  std::vector<dataset::Choice> choices;
};

struct Emission {
  std::vector<int> tokens;
  std::vector<double> logps;
};

class Policy;
using PolicyPtr = std::shared_ptr<const Policy>;

/// Autoregressive policy over integer tokens. Snapshots are immutable;
/// with_parameters returns a new one.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual Emission sample(const PolicyInput& in, Rng& rng, bool greedy) const = 0;

  /// Per-token log-probabilities. Throws PreconditionError for a token outside
  /// the vocabulary at its position or a sequence of the wrong length.
  virtual std::vector<double> log_prob(const PolicyInput& in, std::span<const int> tokens) const = 0;

  virtual const std::vector<double>& parameters() const noexcept = 0;
  virtual PolicyPtr with_parameters(std::vector<double> theta) const = 0;

  /// grad += d/dtheta sum_t weights[t] * log p(tokens[t] | prefix).
  virtual void backprop_log_prob(const PolicyInput& in, std::span<const int> tokens,
                                 std::span<const double> weights, std::vector<double>& grad) const = 0;

  /// Exact KL(this || ref) of each next-token distribution along `tokens`.
  /// nullopt when `ref` is not comparable (different family).
  virtual std::optional<std::vector<double>> step_kl(const PolicyInput& in, std::span<const int> tokens,
                                                     const Policy& ref) const {
    (void)in, (void)tokens, (void)ref;
    return std::nullopt;
  }

  /// grad += d/dtheta sum_t weights[t] * step_kl[t]. Requires step_kl support.
  virtual void backprop_step_kl(const PolicyInput& in, std::span<const int> tokens, const Policy& ref,
                                std::span<const double> weights, std::vector<double>& grad) const;

  /// Response text for a token sequence.
  virtual std::string decode(const PolicyInput& in, std::span<const int> tokens) const = 0;
};

/// One categorical decision. Option logits are sparse dot products with theta.
struct Factor {
  using Features = std::vector<std::pair<std::size_t, double>>;
  std::vector<Features> options;
  std::vector<char> allowed;  // empty: every option allowed
};

/// Policies whose next-token distribution is a softmax over log-linear
/// option scores. Subclasses describe the factor at each prefix.
class LogLinearPolicy : public Policy {
 public:
  Emission sample(const PolicyInput& in, Rng& rng, bool greedy) const override;
  std::vector<double> log_prob(const PolicyInput& in, std::span<const int> tokens) const override;
  const std::vector<double>& parameters() const noexcept override { return theta_; }
  void backprop_log_prob(const PolicyInput& in, std::span<const int> tokens, std::span<const double> weights,
                         std::vector<double>& grad) const override;
  std::optional<std::vector<double>> step_kl(const PolicyInput& in, std::span<const int> tokens,
                                             const Policy& ref) const override;
  void backprop_step_kl(const PolicyInput& in, std::span<const int> tokens, const Policy& ref,
                        std::span<const double> weights, std::vector<double>& grad) const override;

  /// The factor that decides tokens[prefix.size()], or nullopt when the
  /// sequence is complete.
  virtual std::optional<Factor> next_factor(const PolicyInput& in, std::span<const int> prefix) const = 0;

  /// Log-probabilities of every option of `f` (-inf where disallowed).
  std::vector<double> log_softmax(const Factor& f) const;

 protected:
  explicit LogLinearPolicy(std::vector<double> theta) : theta_(std::move(theta)) {}

  std::vector<double> theta_;

 private:
  const LogLinearPolicy& comparable(const Policy& ref) const;
};

/// Input-independent sequence policy: token t is drawn from a table indexed
/// by the previous token. Parameters: V + (L-1)*V*V logits.
class TabularSequencePolicy final : public LogLinearPolicy {
 public:
  TabularSequencePolicy(int length, int symbols, std::vector<double> theta);
  static std::size_t parameter_count(int length, int symbols);

  PolicyPtr with_parameters(std::vector<double> theta) const override;
  std::optional<Factor> next_factor(const PolicyInput& in, std::span<const int> prefix) const override;
  std::string decode(const PolicyInput& in, std::span<const int> tokens) const override;

  int length() const noexcept { return length_; }
  int symbols() const noexcept { return symbols_; }

 private:
  int length_;
  int symbols_;
};

}  // namespace vadr
