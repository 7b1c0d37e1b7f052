// SPDX-License-Identifier: Apache-2.0

#include "vadr/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vadr/error.hpp"
#include "vadr/text.hpp"

namespace vadr::rewards {

namespace {

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RewardConfig::validate() const {
  const auto& w = weights;
  for (double v : {w.format, w.accuracy, w.depth, w.risk, w.verification}) {
    if (!(v >= 0.0)) throw PreconditionError("reward weights must be >= 0");
  }
  if (!(risk_schedule[0] > risk_schedule[1] && risk_schedule[1] > risk_schedule[2])) {
    throw PreconditionError("risk_schedule must strictly decrease with distance");
  }
  if (!(boundary_trim_fraction > 0.0 && boundary_trim_fraction < 0.5)) {
    throw PreconditionError("boundary_trim_fraction must lie in (0, 0.5)");
  }
  if (!(depth_penalty_per_step >= 0.0)) throw PreconditionError("depth_penalty_per_step must be >= 0");
  if (!(open_answer_threshold >= 0.0 && open_answer_threshold <= 1.0)) {
    throw PreconditionError("open_answer_threshold must lie in [0, 1]");
  }
  if (!(verification_probability >= 0.0 && verification_probability <= 1.0)) {
    throw PreconditionError("verification_probability must lie in [0, 1]");
  }
}

RewardConfig RewardConfig::from_json(const nlohmann::json& j, const RewardConfig& base) {
  RewardConfig c = base;
  try {
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      read(w, "format", c.weights.format);
      read(w, "accuracy", c.weights.accuracy);
      read(w, "depth", c.weights.depth);
      read(w, "risk", c.weights.risk);
      read(w, "verification", c.weights.verification);
    }
    read(j, "depth_penalty_per_step", c.depth_penalty_per_step);
    if (j.contains("risk_schedule")) {
      const auto v = j.at("risk_schedule").get<std::vector<double>>();
      if (v.size() != 3) throw PreconditionError("risk_schedule needs 3 entries");
      std::copy(v.begin(), v.end(), c.risk_schedule.begin());
    }
    read(j, "missing_risk_penalty", c.missing_risk_penalty);
    read(j, "boundary_trim_fraction", c.boundary_trim_fraction);
    read(j, "open_answer_threshold", c.open_answer_threshold);
    read(j, "verification_probability", c.verification_probability);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("reward config: ") + e.what());
  }
  c.validate();
  return c;
}

RewardConfig RewardConfig::from_json(const nlohmann::json& j) { return from_json(j, RewardConfig{}); }

nlohmann::ordered_json RewardConfig::to_json() const {
  nlohmann::ordered_json j;
  j["weights"] = {{"format", weights.format},
                  {"accuracy", weights.accuracy},
                  {"depth", weights.depth},
                  {"risk", weights.risk},
                  {"verification", weights.verification}};
  j["depth_penalty_per_step"] = depth_penalty_per_step;
  j["risk_schedule"] = risk_schedule;
  j["missing_risk_penalty"] = missing_risk_penalty;
  j["boundary_trim_fraction"] = boundary_trim_fraction;
  j["open_answer_threshold"] = open_answer_threshold;
  j["verification_probability"] = verification_probability;
  return j;
}

nlohmann::ordered_json RewardBreakdown::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = format;
  j["accuracy"] = accuracy;
  j["depth"] = depth;
  j["risk"] = risk;
  j["verification"] = verification;
  j["total"] = total;
  return j;
}

double format_reward(const grammar::ParseOutcome& outcome) noexcept { return outcome.ok() ? 1.0 : 0.0; }

std::optional<char> extract_option_letter(std::string_view s) noexcept {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c < 'A' || c > 'D') continue;
    const bool left_ok = i == 0 || !is_alnum(s[i - 1]);
    const bool right_ok = i + 1 == s.size() || !is_alnum(s[i + 1]);
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

double token_f1(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  std::map<std::string, int> ref_counts;
  for (const auto& t : ref) ++ref_counts[t];
  int overlap = 0;
  for (const auto& t : cand) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double accuracy_reward(const grammar::ParseOutcome& outcome, const dataset::QuestionRecord& q,
                       const RewardConfig& cfg) {
  if (is_mcq(q.kind)) {
    if (!q.gold_letter) throw PreconditionError("MCQ record " + q.id + " has no gold_letter");
  } else if (!q.reference_answer) {
    throw PreconditionError("open record " + q.id + " has no reference_answer");
  }
  const auto* resp = outcome.response_if();
  if (resp == nullptr) return 0.0;
  if (is_mcq(q.kind)) {
    auto letter = extract_option_letter(resp->answer);
    return letter && *letter == *q.gold_letter ? 1.0 : 0.0;
  }
  const double f1 = token_f1(resp->answer, *q.reference_answer);
  if (cfg.open_answer_threshold > 0.0) return f1 >= cfg.open_answer_threshold ? 1.0 : 0.0;
  return f1;
}

double depth_reward(int predicted, int expected, bool valid, const RewardConfig& cfg) noexcept {
  if (!valid) return 0.0;
  const int gap = predicted > expected ? predicted - expected : expected - predicted;
  return std::max(0.0, 1.0 - cfg.depth_penalty_per_step * gap);
}

double risk_reward(std::optional<RiskLevel> predicted, std::optional<RiskLevel> gold,
                   const RewardConfig& cfg) noexcept {
  if (!gold) return 0.0;
  if (!predicted) return cfg.missing_risk_penalty;
  return cfg.risk_schedule[static_cast<std::size_t>(risk_distance(*predicted, *gold))];
}

double verification_reward(const grammar::StructuredResponse& resp, const dataset::QuestionRecord& q,
                           const VideoTimeline& video, oracle::PolicyOracle& oracle,
                           const Taxonomy& taxonomy, Rng& rng, const RewardConfig& cfg) {
  if (!resp.judgment) return 0.0;
  const bool abnormal = resp.judgment->abnormal();
  if (abnormal && !resp.judgment->interval) {
    throw PreconditionError("abnormal judgment without interval");
  }

  std::optional<VideoTimeline> trimmed;
  try {
    if (abnormal) {
      trimmed = excise_interval(video, *resp.judgment->interval);
    } else {
      const auto side = uniform_index(rng, 2) == 0 ? Boundary::Head : Boundary::Tail;
      trimmed = excise_boundary(video, side, cfg.boundary_trim_fraction);
    }
  } catch (const EmptyTimeline&) {
    return 0.0;
  }

  const auto reply = grammar::parse_response(oracle.query(*trimmed, q, /*greedy=*/true), taxonomy);
  const auto* r = reply.response_if();
  if (r == nullptr || !r->judgment) return 0.0;
  if (abnormal) return r->judgment->abnormal() ? 0.0 : 1.0;
  return r->judgment->abnormal() ? -1.0 : 0.0;
}

double total_reward(const RewardBreakdown& c, const RewardConfig& cfg) noexcept {
  const auto& w = cfg.weights;
  return w.format * c.format + w.accuracy * c.accuracy + w.depth * c.depth + w.risk * c.risk +
         w.verification * c.verification;
}

RewardBreakdown score_response(const grammar::ParseOutcome& outcome, const dataset::QuestionRecord& q,
                               const RewardConfig& cfg, double verification) {
  RewardBreakdown b;
  b.format = format_reward(outcome);
  b.accuracy = accuracy_reward(outcome, q, cfg);
  b.depth = depth_reward(grammar::reasoning_depth(outcome), grammar::expected_depth(q.kind), outcome.ok(), cfg);
  const auto* resp = outcome.response_if();
  // Parse errors earn nothing, including the missing-risk penalty.
  b.risk = resp ? risk_reward(resp->risk, q.gold_risk, cfg) : 0.0;
  b.verification = verification;
  b.total = total_reward(b, cfg);
  return b;
}

}  // namespace vadr::rewards
