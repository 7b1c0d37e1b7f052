// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vadr/dataset.hpp"
#include "vadr/grammar.hpp"
#include "vadr/oracle.hpp"

namespace vadr::eval {

// Lexical metrics. All tokenize with text::tokenize (lowercase, punctuation dropped).

/// Geometric mean of clipped n-gram precisions (add-one smoothing above
/// unigrams) times exp(min(0, 1 - |ref|/|cand|)). Empty candidate gives 0.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class RougeVariant { N2, L };
PRF rouge(std::string_view candidate, std::string_view reference, RougeVariant variant);

/// Exact-match unigram METEOR: F = 10PR / (R + 9P), penalty 0.5 (chunks/matches)^3.
double meteor_basic(std::string_view candidate, std::string_view reference);

/// One prediction against its gold record.
struct EvalRecord {
  dataset::QuestionRecord question;
  grammar::ParseOutcome prediction;
  std::string raw;
  /// Judge verdict for the whole reasoning, when one was obtained.
  std::optional<bool> reasoning_correct;

  bool answer_correct(double open_threshold = 1.0) const;
  /// Judgment category equals gold; false without a judgment.
  bool category_correct() const;
  bool risk_correct() const;
  bool depth_aligned() const;
};

/// Parses `raw` and pairs it with `q`.
EvalRecord make_eval_record(const dataset::QuestionRecord& q, std::string raw, const Taxonomy& taxonomy);

/// Throws PreconditionError for a non-MCQ record or an empty list.
double mcq_accuracy(const std::vector<EvalRecord>& records);

/// Fraction with reasoning_depth == expected_depth; 0 for an empty list.
double depth_alignment(const std::vector<EvalRecord>& records);

struct JointInput {
  bool reasoning_ok;
  bool answer_ok;
  std::optional<bool> category_ok;
};

struct JointCounts {
  std::size_t rr = 0, rw = 0, wr = 0, ww = 0, rrr = 0, www = 0;
  std::size_t total() const noexcept { return rr + rw + wr + ww; }
};

struct JointReport {
  double rr = 0.0, rw = 0.0, wr = 0.0, ww = 0.0;  // first letter: reasoning, second: answer
  std::optional<double> rrr, www;
  JointCounts counts;

  /// "RR/RW/WR/WW" with three decimals, e.g. "0.571/0.252/0.087/0.090".
  std::string row() const;
  nlohmann::ordered_json to_json() const;
};

/// Quadrant frequencies. With `triple`, every input needs category_ok
/// (PreconditionError otherwise). Empty input gives all zeros.
JointReport joint_outcomes(const std::vector<JointInput>& inputs, bool triple = true);

struct StageReport {
  std::optional<double> identification;
  std::optional<double> interpretation;
  std::optional<double> category_accuracy;
  std::optional<double> appropriateness;
  std::optional<double> risk_accuracy;

  nlohmann::ordered_json to_json() const;
};

/// Exact fields from the records; judged fields from `judge` (absent when
/// null or when the judge is unavailable) and empty partitions absent.
StageReport stage_report(const std::vector<EvalRecord>& records, oracle::Judge* judge);

struct EvalOptions {
  /// Open answers count as correct at or above this token F1.
  double open_answer_threshold = 1.0;
};

/// Full report document: answer metrics, stage metrics, joint outcomes,
/// depth alignment. reasoning_ok uses record verdicts when present, else the
/// judge's reasoning_correct rubric, else the rule-based surrogate.
nlohmann::ordered_json evaluate(const std::vector<EvalRecord>& records, oracle::Judge* judge,
                                const Taxonomy& taxonomy, const EvalOptions& opts = {});

}  // namespace vadr::eval
