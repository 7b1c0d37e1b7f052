// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vadr/taxonomy.hpp"
#include "vadr/types.hpp"

/// Staged-reasoning response grammar:
///
///   <think>
///     [<perception>...</perception>]
///     [<cognition>... <which>CAT</which> [<when>S,E</when>] ...</cognition>]
///     [<action>... <risk>Low|Medium|High</risk> ...</action>]
///   </think>
///   <answer>...</answer>
///
/// Tags are case-sensitive. Whitespace between tags is ignored; payload
/// whitespace is kept verbatim.
namespace vadr::grammar {

struct AnomalyJudgment {
  std::string category;  // canonical taxonomy spelling, or "normal"
  std::optional<TemporalInterval> interval;  // present iff category != normal

  bool abnormal() const noexcept { return category != kNormalLabel; }
  bool operator==(const AnomalyJudgment&) const = default;
};

struct Stage {
  StageKind kind;
  /// Stage prose with the structured field tags (<which>, <when>, <risk>)
  /// removed; the text around them is concatenated verbatim.
  std::string text;

  bool operator==(const Stage&) const = default;
};

struct StructuredResponse {
  std::vector<Stage> stages;
  std::optional<AnomalyJudgment> judgment;
  std::optional<RiskLevel> risk;
  std::string answer;
  std::string raw;

  bool has_stage(StageKind k) const noexcept;
  const Stage* stage(StageKind k) const noexcept;

  /// Field-wise equality; `raw` is provenance and is not compared.
  bool operator==(const StructuredResponse& o) const {
    return stages == o.stages && judgment == o.judgment && risk == o.risk &&
           answer == o.answer;
  }
};

enum class ParseErrorClass {
  TagMismatch,
  StageOrdering,
  MissingAnswer,
  BadInterval,
  BadRisk,
  UnknownCategory,
  DuplicateStage,
};

std::string_view to_string(ParseErrorClass c) noexcept;

struct ParseError {
  ParseErrorClass kind;
  std::size_t offset;  // byte offset into the input, <= input size
  std::string message;
};

/// Exactly one alternative is populated.
class ParseOutcome {
 public:
  ParseOutcome(StructuredResponse r) : value_(std::move(r)) {}
  ParseOutcome(ParseError e) : value_(std::move(e)) {}

  bool ok() const noexcept { return value_.index() == 0; }
  const StructuredResponse& response() const { return std::get<0>(value_); }
  const ParseError& error() const { return std::get<1>(value_); }
  const StructuredResponse* response_if() const noexcept { return std::get_if<0>(&value_); }

 private:
  std::variant<StructuredResponse, ParseError> value_;
};

/// Total: never throws for any input byte string.
ParseOutcome parse_response(std::string_view raw, const Taxonomy& taxonomy);

/// Canonical text. Throws PreconditionError when `resp` breaks an invariant.
std::string render_response(const StructuredResponse& resp);

/// Throws PreconditionError describing the first violated invariant.
void check_invariants(const StructuredResponse& resp);

/// Depth of the deepest present stage; 0 for parse errors.
int reasoning_depth(const ParseOutcome& outcome) noexcept;
int reasoning_depth(const StructuredResponse& resp) noexcept;

/// Depth a question kind calls for: Perception* 1, Cognition* 2, Action* 3.
constexpr int expected_depth(QuestionKind kind) noexcept {
  return depth_of(dimension_of(kind));
}

}  // namespace vadr::grammar
