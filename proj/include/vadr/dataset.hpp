// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vadr/rng.hpp"
#include "vadr/taxonomy.hpp"
#include "vadr/types.hpp"

namespace vadr::dataset {

enum class Split { Sft, Rl, Test };

std::string_view to_string(Split s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct Choice {
  char letter;  // 'A'..'D'
  std::string text;
  bool operator==(const Choice&) const = default;
};

/// One question about one video. Field names match the JSONL schema.
struct QuestionRecord {
  std::string id;
  std::string video_id;
  QuestionKind kind = QuestionKind::PerceptionMCQ;
  std::string question;
  std::vector<Choice> choices;  // empty means absent
  std::optional<char> gold_letter;
  std::optional<std::string> reference_answer;
  std::string gold_category;
  std::optional<TemporalInterval> gold_interval;
  std::optional<RiskLevel> gold_risk;
  Split split = Split::Test;
  std::optional<std::string> cot;

  bool operator==(const QuestionRecord&) const = default;
};

/// Checks every per-record invariant; throws ValidationError with one of the
/// codes: Schema, UnknownCategory, BadChoices, MissingGoldLetter,
/// UnexpectedReference, MissingReference, UnexpectedChoices, BadInterval,
/// IntervalMismatch, RiskMismatch, CotMismatch, BadCot.
/// Canonicalizes gold_category in place.
void validate_record(QuestionRecord& rec, const Taxonomy& taxonomy);

/// Parses one JSON object (schema only; no invariant checks).
QuestionRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const QuestionRecord& rec);

/// All-or-nothing JSONL load. Errors carry the 1-based line number; duplicate
/// ids raise DuplicateId.
std::vector<QuestionRecord> load_records(const std::filesystem::path& path,
                                         const Taxonomy& taxonomy);
std::vector<QuestionRecord> load_records(std::istream& in, const Taxonomy& taxonomy);

/// Canonical JSONL: one object per line, fixed key order, absent fields null.
void save_records(std::ostream& out, const std::vector<QuestionRecord>& records);
void save_records(const std::filesystem::path& path, const std::vector<QuestionRecord>& records);

struct SplitCounts {
  std::map<Split, std::size_t> records;
  std::map<Split, std::size_t> videos;
};

SplitCounts count_splits(const std::vector<QuestionRecord>& records);

/// Manifest shape check, e.g. {"train_videos": 8203, "test_videos": 438}.
/// Training videos are sft + rl. Throws ValidationError("ManifestMismatch").
void check_manifest(const SplitCounts& counts, const nlohmann::json& manifest);

/// Question text followed by "A. ..." lines for MCQ; what a model is shown.
std::string render_prompt(const QuestionRecord& rec);

struct QuestionTemplate {
  std::string id;
  StageKind dimension;
  bool mcq;
  bool open;
  std::string text;
};

/// Question templates plus the per-dimension patterns that phrase choices and
/// reference answers, and the stage prose bank used for canonical reasoning.
/// Patterns contain one "{category}" slot.
class TemplateLibrary {
 public:
  static constexpr std::size_t kTemplateCount = 37;

  /// Stand-in library; replace with the benchmark's own via from_json.
  static const TemplateLibrary& builtin();
  static TemplateLibrary from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<QuestionTemplate>& templates() const noexcept { return templates_; }
  std::vector<const QuestionTemplate*> select(StageKind dim, bool mcq) const;

  std::string choice_text(StageKind dim, std::string_view category) const;
  std::string answer_text(StageKind dim, std::string_view category) const;

  /// Inverse of choice_text: the canonical category a choice names, if any.
  std::optional<std::string> category_of_choice(StageKind dim, std::string_view choice,
                                                const Taxonomy& taxonomy) const;

  const std::vector<std::string>& stage_texts(StageKind k) const;

  /// How "normal" reads inside patterns.
  const std::string& normal_phrase() const noexcept { return normal_phrase_; }

 private:
  std::string phrase(std::string_view category) const;

  std::vector<QuestionTemplate> templates_;
  std::map<StageKind, std::string> choice_patterns_;
  std::map<StageKind, std::string> answer_patterns_;
  std::map<StageKind, std::vector<std::string>> stage_texts_;
  std::string normal_phrase_ = "normal activity";
};

struct VideoMeta {
  std::string video_id;
  std::string category;  // leaf label or "normal"
  std::optional<TemporalInterval> interval;
  std::optional<RiskLevel> risk;  // defaults to the taxonomy's map
  Split split = Split::Test;
};

/// Six records, one MCQ and one Open per dimension. The correct MCQ option
/// lands uniformly on A-D; distractors are sibling leaves first, then other
/// leaves. SFT records carry a canonical gold reasoning rendering.
std::vector<QuestionRecord> instantiate_questions(const VideoMeta& meta,
                                                  const TemplateLibrary& lib,
                                                  const Taxonomy& taxonomy, Rng& rng);

}  // namespace vadr::dataset
