// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "json.hpp"
#include "vadr/dataset.hpp"
#include "vadr/grammar.hpp"
#include "vadr/oracle.hpp"
#include "vadr/rng.hpp"
#include "vadr/timeline.hpp"

namespace vadr::rewards {

struct RewardWeights {
  double format = 1.0;
  double accuracy = 1.0;
  double depth = 1.0;
  double risk = 1.0;
  double verification = 1.0;
};

struct RewardConfig {
  RewardWeights weights;
  double depth_penalty_per_step = 0.5;
  /// Indexed by ordinal distance 0, 1, 2; must strictly decrease.
  std::array<double, 3> risk_schedule{1.0, 0.3, -0.5};
  double missing_risk_penalty = -0.5;
  double boundary_trim_fraction = 0.25;
  /// 0 keeps open-answer accuracy as continuous token F1; > 0 binarizes.
  double open_answer_threshold = 0.0;
  /// Chance that a rollout group gets the verification re-query at all.
  double verification_probability = 1.0;

  void validate() const;  // throws PreconditionError

  /// Missing keys keep the values of `base`.
  static RewardConfig from_json(const nlohmann::json& j, const RewardConfig& base);
  static RewardConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct RewardBreakdown {
  double format = 0.0;
  double accuracy = 0.0;
  double depth = 0.0;
  double risk = 0.0;
  double verification = 0.0;
  double total = 0.0;

  nlohmann::ordered_json to_json() const;
};

double format_reward(const grammar::ParseOutcome& outcome) noexcept;

/// First standalone capital A-D (not adjacent to a letter or digit).
std::optional<char> extract_option_letter(std::string_view answer) noexcept;

/// Multiset token F1 after lowercase/punctuation tokenization.
double token_f1(std::string_view candidate, std::string_view reference);

/// MCQ: exact option letter. Open: token F1 (binarized when configured).
/// Throws PreconditionError when the record lacks its gold answer.
double accuracy_reward(const grammar::ParseOutcome& outcome, const dataset::QuestionRecord& q,
                       const RewardConfig& cfg);

double depth_reward(int predicted_depth, int expected_depth, bool valid, const RewardConfig& cfg) noexcept;

double risk_reward(std::optional<RiskLevel> predicted, std::optional<RiskLevel> gold,
                   const RewardConfig& cfg) noexcept;

/// Re-queries the oracle (greedy) on a trimmed timeline.
///   abnormal judgment: drop the predicted interval; +1 if the reply flips to normal.
///   normal judgment: drop a random head or tail segment; -1 if the reply flips to abnormal.
///   otherwise, or no judgment, unparseable reply, or nothing left to show: 0.
/// Oracle transport errors propagate.
double verification_reward(const grammar::StructuredResponse& resp, const dataset::QuestionRecord& q,
                           const VideoTimeline& video, oracle::PolicyOracle& oracle,
                           const Taxonomy& taxonomy, Rng& rng, const RewardConfig& cfg);

/// Weighted sum of the five components (ignores the incoming total).
double total_reward(const RewardBreakdown& components, const RewardConfig& cfg) noexcept;

/// Every oracle-free component plus a supplied verification value; fills total.
RewardBreakdown score_response(const grammar::ParseOutcome& outcome, const dataset::QuestionRecord& q,
                               const RewardConfig& cfg, double verification = 0.0);

}  // namespace vadr::rewards
