// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace vadr {

/// Reasoning stage; the enumerator value is the stage's depth.
enum class StageKind : int { Perception = 1, Cognition = 2, Action = 3 };

constexpr int depth_of(StageKind k) noexcept { return static_cast<int>(k); }
std::string_view to_string(StageKind k) noexcept;

/// Ordered severity; the value is the ordinal used for distances.
enum class RiskLevel : int { Low = 0, Medium = 1, High = 2 };

constexpr int risk_distance(RiskLevel a, RiskLevel b) noexcept {
  const int d = static_cast<int>(a) - static_cast<int>(b);
  return d < 0 ? -d : d;
}
std::string_view to_string(RiskLevel r) noexcept;
/// Exact, case-sensitive: "Low", "Medium", "High".
std::optional<RiskLevel> parse_risk(std::string_view s) noexcept;

/// Closed interval of normalized time. Endpoints are snapped to a 1e-6 grid
/// on construction so the canonical 6-decimal text form round-trips exactly.
class TemporalInterval {
 public:
  /// Throws PreconditionError unless 0 <= start <= end <= 1 (after snapping).
  TemporalInterval(double start, double end);

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  bool contains(double t) const noexcept { return t >= start_ && t <= end_; }

  bool operator==(const TemporalInterval&) const = default;

  static double snap(double v) noexcept { return std::round(v * 1e6) / 1e6; }

 private:
  double start_;
  double end_;
};

/// Six question kinds: three reasoning dimensions times {MCQ, Open}.
enum class QuestionKind {
  PerceptionMCQ,
  CognitionMCQ,
  ActionMCQ,
  PerceptionOpen,
  CognitionOpen,
  ActionOpen,
};

inline constexpr QuestionKind kAllQuestionKinds[] = {
    QuestionKind::PerceptionMCQ,  QuestionKind::CognitionMCQ,
    QuestionKind::ActionMCQ,      QuestionKind::PerceptionOpen,
    QuestionKind::CognitionOpen,  QuestionKind::ActionOpen};

constexpr bool is_mcq(QuestionKind k) noexcept {
  return k == QuestionKind::PerceptionMCQ || k == QuestionKind::CognitionMCQ ||
         k == QuestionKind::ActionMCQ;
}

/// The reasoning dimension a kind probes.
constexpr StageKind dimension_of(QuestionKind k) noexcept {
  switch (k) {
    case QuestionKind::PerceptionMCQ:
    case QuestionKind::PerceptionOpen: return StageKind::Perception;
    case QuestionKind::CognitionMCQ:
    case QuestionKind::CognitionOpen: return StageKind::Cognition;
    default: return StageKind::Action;
  }
}

std::string_view to_string(QuestionKind k) noexcept;
std::optional<QuestionKind> parse_question_kind(std::string_view s) noexcept;

/// The label reserved for "no anomaly".
inline constexpr std::string_view kNormalLabel = "normal";

}  // namespace vadr
