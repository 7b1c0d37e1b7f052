// SPDX-License-Identifier: Apache-2.0

#include "vadr/types.hpp"

#include "vadr/error.hpp"

namespace vadr {

std::string_view to_string(StageKind k) noexcept {
  switch (k) {
    case StageKind::Perception: return "perception";
    case StageKind::Cognition: return "cognition";
    case StageKind::Action: return "action";
  }
  return "?";
}

std::string_view to_string(RiskLevel r) noexcept {
  switch (r) {
    case RiskLevel::Low: return "Low";
    case RiskLevel::Medium: return "Medium";
    case RiskLevel::High: return "High";
  }
  return "?";
}

std::optional<RiskLevel> parse_risk(std::string_view s) noexcept {
  if (s == "Low") return RiskLevel::Low;
  if (s == "Medium") return RiskLevel::Medium;
  if (s == "High") return RiskLevel::High;
  return std::nullopt;
}

std::string_view to_string(QuestionKind k) noexcept {
  switch (k) {
    case QuestionKind::PerceptionMCQ: return "PerceptionMCQ";
    case QuestionKind::CognitionMCQ: return "CognitionMCQ";
    case QuestionKind::ActionMCQ: return "ActionMCQ";
    case QuestionKind::PerceptionOpen: return "PerceptionOpen";
    case QuestionKind::CognitionOpen: return "CognitionOpen";
    case QuestionKind::ActionOpen: return "ActionOpen";
  }
  return "?";
}

std::optional<QuestionKind> parse_question_kind(std::string_view s) noexcept {
  for (auto k : kAllQuestionKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

TemporalInterval::TemporalInterval(double start, double end)
    : start_(snap(start)), end_(snap(end)) {
  if (!std::isfinite(start) || !std::isfinite(end) || start_ < 0.0 ||
      end_ > 1.0 || start_ > end_) {
    throw PreconditionError("interval must satisfy 0 <= start <= end <= 1");
  }
}

}  // namespace vadr
