// SPDX-License-Identifier: Apache-2.0

#include "vadr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "vadr/error.hpp"
#include "vadr/grammar.hpp"
#include "vadr/text.hpp"

namespace vadr::dataset {

namespace {

using nlohmann::json;

constexpr const char* kBuiltinTemplates = R"json({
  "normal_phrase": "normal activity",
  "choice_patterns": {
    "perception": "The video shows {category}.",
    "cognition": "{category}",
    "action": "Respond to {category} accordingly."
  },
  "answer_patterns": {
    "perception": "the video shows {category}",
    "cognition": "the anomaly is {category}",
    "action": "respond to {category} promptly"
  },
  "stage_texts": {
    "perception": [
      "The scene, its people and its objects are observed.",
      "Frames are scanned for unusual motion.",
      "The environment and its layout are described."],
    "cognition": [
      "The observed events are compared with normal behavior.",
      "The cause of the deviation is analyzed.",
      "Possible consequences are considered."],
    "action": [
      "The severity of the situation is assessed.",
      "An immediate response is recommended.",
      "Preventive measures are suggested."]
  },
  "templates": [
    {"id": "P01", "dimension": "perception", "mcq": true,  "open": true,  "text": "What is happening in the video?"},
    {"id": "P02", "dimension": "perception", "mcq": true,  "open": false, "text": "Which activity can be seen in the scene?"},
    {"id": "P03", "dimension": "perception", "mcq": false, "open": true,  "text": "Describe the main event in the video."},
    {"id": "P04", "dimension": "perception", "mcq": true,  "open": true,  "text": "What are the people in the video doing?"},
    {"id": "P05", "dimension": "perception", "mcq": true,  "open": false, "text": "Which objects are involved in the main event?"},
    {"id": "P06", "dimension": "perception", "mcq": false, "open": true,  "text": "What does the scene look like?"},
    {"id": "P07", "dimension": "perception", "mcq": true,  "open": true,  "text": "What kind of motion is visible?"},
    {"id": "P08", "dimension": "perception", "mcq": true,  "open": false, "text": "Which of the following best matches the visible event?"},
    {"id": "P09", "dimension": "perception", "mcq": false, "open": true,  "text": "What is the most salient thing in the video?"},
    {"id": "P10", "dimension": "perception", "mcq": true,  "open": true,  "text": "What interaction takes place between the subjects?"},
    {"id": "P11", "dimension": "perception", "mcq": true,  "open": false, "text": "What is visible in the highlighted region?"},
    {"id": "P12", "dimension": "perception", "mcq": false, "open": true,  "text": "Summarize what the camera captures."},
    {"id": "C01", "dimension": "cognition", "mcq": true,  "open": true,  "text": "Which anomaly category does this event belong to?"},
    {"id": "C02", "dimension": "cognition", "mcq": true,  "open": false, "text": "What makes this video abnormal?"},
    {"id": "C03", "dimension": "cognition", "mcq": false, "open": true,  "text": "Why is the event considered an anomaly?"},
    {"id": "C04", "dimension": "cognition", "mcq": true,  "open": true,  "text": "What caused the unusual event?"},
    {"id": "C05", "dimension": "cognition", "mcq": true,  "open": false, "text": "Which norm is violated in the video?"},
    {"id": "C06", "dimension": "cognition", "mcq": false, "open": true,  "text": "What is the likely intention of the people involved?"},
    {"id": "C07", "dimension": "cognition", "mcq": true,  "open": true,  "text": "What consequence is most likely to follow?"},
    {"id": "C08", "dimension": "cognition", "mcq": true,  "open": false, "text": "How does the event deviate from normal behavior?"},
    {"id": "C09", "dimension": "cognition", "mcq": false, "open": true,  "text": "Explain the causal factors behind the event."},
    {"id": "C10", "dimension": "cognition", "mcq": true,  "open": true,  "text": "Is there an anomaly, and if so which one?"},
    {"id": "C11", "dimension": "cognition", "mcq": true,  "open": false, "text": "Which description best explains the anomaly?"},
    {"id": "C12", "dimension": "cognition", "mcq": false, "open": true,  "text": "What would happen if the event continued?"},
    {"id": "C13", "dimension": "cognition", "mcq": true,  "open": true,  "text": "What type of abnormal event occurs?"},
    {"id": "A01", "dimension": "action", "mcq": true,  "open": true,  "text": "How risky is the situation and what should be done?"},
    {"id": "A02", "dimension": "action", "mcq": true,  "open": false, "text": "What is the most appropriate immediate response?"},
    {"id": "A03", "dimension": "action", "mcq": false, "open": true,  "text": "What preventive measures are recommended?"},
    {"id": "A04", "dimension": "action", "mcq": true,  "open": true,  "text": "Who should be alerted, and how urgently?"},
    {"id": "A05", "dimension": "action", "mcq": true,  "open": false, "text": "Which action best mitigates the hazard?"},
    {"id": "A06", "dimension": "action", "mcq": false, "open": true,  "text": "How should security staff respond?"},
    {"id": "A07", "dimension": "action", "mcq": true,  "open": true,  "text": "What is the recommended safety action?"},
    {"id": "A08", "dimension": "action", "mcq": true,  "open": false, "text": "Which response plan fits the situation?"},
    {"id": "A09", "dimension": "action", "mcq": false, "open": true,  "text": "What long-term measure would prevent a recurrence?"},
    {"id": "A10", "dimension": "action", "mcq": true,  "open": true,  "text": "How dangerous is the event for bystanders?"},
    {"id": "A11", "dimension": "action", "mcq": true,  "open": false, "text": "What should a nearby person do?"},
    {"id": "A12", "dimension": "action", "mcq": false, "open": true,  "text": "What is the appropriate level of intervention?"}
  ]
})json";

std::optional<StageKind> parse_dimension(std::string_view s) {
  if (s == "perception") return StageKind::Perception;
  if (s == "cognition") return StageKind::Cognition;
  if (s == "action") return StageKind::Action;
  return std::nullopt;
}

std::string fill(const std::string& pattern, std::string_view value) {
  const auto at = pattern.find("{category}");
  if (at == std::string::npos) return pattern;
  return pattern.substr(0, at) + std::string(value) + pattern.substr(at + 10);
}

[[noreturn]] void fail(const std::string& code, const std::string& detail) {
  throw ValidationError(code, detail);
}

bool present(const json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

}  // namespace

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Sft: return "sft";
    case Split::Rl: return "rl";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "sft") return Split::Sft;
  if (s == "rl") return Split::Rl;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

QuestionRecord record_from_json(const json& j) {
  if (!j.is_object()) fail("Schema", "record must be a JSON object");
  QuestionRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.video_id = j.at("video_id").get<std::string>();
    auto kind = parse_question_kind(j.at("kind").get<std::string>());
    if (!kind) fail("Schema", "unknown kind " + j.at("kind").dump());
    r.kind = *kind;
    r.question = j.at("question").get<std::string>();
    if (present(j, "choices")) {
      for (const auto& c : j.at("choices")) {
        const auto letter = c.at("letter").get<std::string>();
        if (letter.size() != 1) fail("BadChoices", "choice letter must be one character");
        r.choices.push_back({letter[0], c.at("text").get<std::string>()});
      }
      if (r.choices.empty()) fail("BadChoices", "choices present but empty");
    }
    if (present(j, "gold_letter")) {
      const auto g = j.at("gold_letter").get<std::string>();
      if (g.size() != 1) fail("MissingGoldLetter", "gold_letter must be one of A-D");
      r.gold_letter = g[0];
    }
    if (present(j, "reference_answer")) r.reference_answer = j.at("reference_answer").get<std::string>();
    r.gold_category = j.at("gold_category").get<std::string>();
    if (present(j, "gold_interval")) {
      const auto& iv = j.at("gold_interval");
      if (!iv.is_array() || iv.size() != 2) fail("BadInterval", "gold_interval must be [start, end]");
      const double s = iv[0].get<double>();
      const double e = iv[1].get<double>();
      try {
        r.gold_interval = TemporalInterval(s, e);
      } catch (const PreconditionError&) {
        fail("BadInterval", "gold_interval must satisfy 0 <= start <= end <= 1");
      }
    }
    if (present(j, "gold_risk")) {
      auto risk = parse_risk(j.at("gold_risk").get<std::string>());
      if (!risk) fail("Schema", "unknown gold_risk " + j.at("gold_risk").dump());
      r.gold_risk = *risk;
    }
    auto split = parse_split(j.at("split").get<std::string>());
    if (!split) fail("Schema", "unknown split " + j.at("split").dump());
    r.split = *split;
    if (present(j, "cot")) r.cot = j.at("cot").get<std::string>();
  } catch (const json::exception& e) {
    fail("Schema", e.what());
  }
  return r;
}

nlohmann::ordered_json record_to_json(const QuestionRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["video_id"] = r.video_id;
  j["kind"] = to_string(r.kind);
  j["question"] = r.question;
  if (r.choices.empty()) {
    j["choices"] = nullptr;
  } else {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : r.choices) {
      arr.push_back({{"letter", std::string(1, c.letter)}, {"text", c.text}});
    }
    j["choices"] = std::move(arr);
  }
  j["gold_letter"] = r.gold_letter ? nlohmann::ordered_json(std::string(1, *r.gold_letter)) : nullptr;
  j["reference_answer"] = r.reference_answer ? nlohmann::ordered_json(*r.reference_answer) : nullptr;
  j["gold_category"] = r.gold_category;
  j["gold_interval"] = r.gold_interval
                           ? nlohmann::ordered_json::array({r.gold_interval->start(), r.gold_interval->end()})
                           : nlohmann::ordered_json(nullptr);
  j["gold_risk"] = r.gold_risk ? nlohmann::ordered_json(to_string(*r.gold_risk)) : nullptr;
  j["split"] = to_string(r.split);
  j["cot"] = r.cot ? nlohmann::ordered_json(*r.cot) : nullptr;
  return j;
}

void validate_record(QuestionRecord& r, const Taxonomy& taxonomy) {
  if (r.id.empty()) fail("Schema", "empty id");
  if (r.video_id.empty()) fail("Schema", "empty video_id");
  if (text::trim(r.question).empty()) fail("Schema", "empty question");

  auto category = taxonomy.canonical(r.gold_category);
  if (!category) fail("UnknownCategory", "gold_category not in taxonomy: " + r.gold_category);
  r.gold_category = *category;

  if (is_mcq(r.kind)) {
    if (r.choices.size() != 4) fail("BadChoices", "MCQ needs exactly 4 choices");
    for (std::size_t i = 0; i < 4; ++i) {
      if (r.choices[i].letter != static_cast<char>('A' + i)) fail("BadChoices", "choice letters must be A-D in order");
      if (text::trim(r.choices[i].text).empty()) fail("BadChoices", "empty choice text");
    }
    if (!r.gold_letter || *r.gold_letter < 'A' || *r.gold_letter > 'D') {
      fail("MissingGoldLetter", "MCQ needs gold_letter in A-D");
    }
    if (r.reference_answer) fail("UnexpectedReference", "MCQ must not carry reference_answer");
  } else {
    if (!r.reference_answer || text::trim(*r.reference_answer).empty()) {
      fail("MissingReference", "open question needs reference_answer");
    }
    if (!r.choices.empty() || r.gold_letter) fail("UnexpectedChoices", "open question must not carry choices");
  }

  const bool abnormal = !Taxonomy::is_normal(r.gold_category);
  if (abnormal != r.gold_interval.has_value()) {
    fail("IntervalMismatch", "gold_interval must be present iff gold_category is not normal");
  }
  const bool action = dimension_of(r.kind) == StageKind::Action;
  if (action != r.gold_risk.has_value()) {
    fail("RiskMismatch", "gold_risk must be present iff the kind is Action*");
  }
  if ((r.split == Split::Sft) != r.cot.has_value()) {
    fail("CotMismatch", "cot must be present iff split is sft");
  }
  if (r.cot) {
    auto parsed = grammar::parse_response(*r.cot, taxonomy);
    if (!parsed.ok()) {
      fail("BadCot", "cot does not parse: " + std::string(grammar::to_string(parsed.error().kind)));
    }
  }
}

std::vector<QuestionRecord> load_records(std::istream& in, const Taxonomy& taxonomy) {
  std::vector<QuestionRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail("Schema", e.what());
      }
      auto rec = record_from_json(j);
      validate_record(rec, taxonomy);
      if (!ids.insert(rec.id).second) fail("DuplicateId", "duplicate id " + rec.id);
      out.push_back(std::move(rec));
    } catch (const ValidationError& e) {
      throw ValidationError(e.code(), e.detail(), lineno);
    }
  }
  return out;
}

std::vector<QuestionRecord> load_records(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw ValidationError("Io", "cannot open " + path.string());
  return load_records(in, taxonomy);
}

void save_records(std::ostream& out, const std::vector<QuestionRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void save_records(const std::filesystem::path& path, const std::vector<QuestionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("Io", "cannot write " + path.string());
  save_records(out, records);
}

SplitCounts count_splits(const std::vector<QuestionRecord>& records) {
  SplitCounts c;
  std::map<Split, std::set<std::string>> videos;
  for (const auto& r : records) {
    ++c.records[r.split];
    videos[r.split].insert(r.video_id);
  }
  for (const auto& [split, ids] : videos) c.videos[split] = ids.size();
  return c;
}

void check_manifest(const SplitCounts& counts, const json& manifest) {
  auto get = [&](Split s) {
    auto it = counts.videos.find(s);
    return it == counts.videos.end() ? std::size_t{0} : it->second;
  };
  const std::size_t train = get(Split::Sft) + get(Split::Rl);
  const std::size_t test = get(Split::Test);
  if (manifest.contains("train_videos") && manifest.at("train_videos").get<std::size_t>() != train) {
    fail("ManifestMismatch", "train videos: expected " + manifest.at("train_videos").dump() +
                                 ", found " + std::to_string(train));
  }
  if (manifest.contains("test_videos") && manifest.at("test_videos").get<std::size_t>() != test) {
    fail("ManifestMismatch", "test videos: expected " + manifest.at("test_videos").dump() +
                                 ", found " + std::to_string(test));
  }
}

std::string render_prompt(const QuestionRecord& rec) {
  std::string out = rec.question;
  for (const auto& c : rec.choices) {
    out += '\n';
    out += c.letter;
    out += ". ";
    out += c.text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// TemplateLibrary

const TemplateLibrary& TemplateLibrary::builtin() {
  static const TemplateLibrary lib = from_json(json::parse(kBuiltinTemplates));
  return lib;
}

TemplateLibrary TemplateLibrary::from_json(const json& doc) {
  TemplateLibrary lib;
  try {
    if (doc.contains("normal_phrase")) lib.normal_phrase_ = doc.at("normal_phrase").get<std::string>();
    for (auto dim : {StageKind::Perception, StageKind::Cognition, StageKind::Action}) {
      const std::string name(vadr::to_string(dim));
      lib.choice_patterns_[dim] = doc.at("choice_patterns").at(name).get<std::string>();
      lib.answer_patterns_[dim] = doc.at("answer_patterns").at(name).get<std::string>();
      lib.stage_texts_[dim] = doc.at("stage_texts").at(name).get<std::vector<std::string>>();
      if (lib.stage_texts_[dim].empty()) fail("Templates", "empty stage text bank for " + name);
    }
    for (const auto& t : doc.at("templates")) {
      auto dim = parse_dimension(t.at("dimension").get<std::string>());
      if (!dim) fail("Templates", "unknown dimension " + t.at("dimension").dump());
      lib.templates_.push_back({t.at("id").get<std::string>(), *dim, t.at("mcq").get<bool>(),
                                t.at("open").get<bool>(), t.at("text").get<std::string>()});
    }
  } catch (const json::exception& e) {
    fail("Templates", e.what());
  }
  if (lib.templates_.size() != kTemplateCount) {
    fail("Templates", "expected " + std::to_string(kTemplateCount) + " templates");
  }
  for (auto dim : {StageKind::Perception, StageKind::Cognition, StageKind::Action}) {
    if (lib.select(dim, true).empty() || lib.select(dim, false).empty()) {
      fail("Templates", "dimension " + std::string(vadr::to_string(dim)) +
                            " needs MCQ- and Open-capable templates");
    }
  }
  return lib;
}

json TemplateLibrary::to_json() const {
  json doc;
  doc["normal_phrase"] = normal_phrase_;
  for (auto dim : {StageKind::Perception, StageKind::Cognition, StageKind::Action}) {
    const std::string name(vadr::to_string(dim));
    doc["choice_patterns"][name] = choice_patterns_.at(dim);
    doc["answer_patterns"][name] = answer_patterns_.at(dim);
    doc["stage_texts"][name] = stage_texts_.at(dim);
  }
  doc["templates"] = json::array();
  for (const auto& t : templates_) {
    doc["templates"].push_back({{"id", t.id},
                                {"dimension", vadr::to_string(t.dimension)},
                                {"mcq", t.mcq},
                                {"open", t.open},
                                {"text", t.text}});
  }
  return doc;
}

std::vector<const QuestionTemplate*> TemplateLibrary::select(StageKind dim, bool mcq) const {
  std::vector<const QuestionTemplate*> out;
  for (const auto& t : templates_) {
    if (t.dimension == dim && (mcq ? t.mcq : t.open)) out.push_back(&t);
  }
  return out;
}

std::string TemplateLibrary::phrase(std::string_view category) const {
  return Taxonomy::is_normal(category) ? normal_phrase_ : std::string(category);
}

std::string TemplateLibrary::choice_text(StageKind dim, std::string_view category) const {
  return fill(choice_patterns_.at(dim), phrase(category));
}

std::string TemplateLibrary::answer_text(StageKind dim, std::string_view category) const {
  return fill(answer_patterns_.at(dim), phrase(category));
}

std::optional<std::string> TemplateLibrary::category_of_choice(StageKind dim, std::string_view choice,
                                                               const Taxonomy& taxonomy) const {
  const auto& pattern = choice_patterns_.at(dim);
  const auto at = pattern.find("{category}");
  if (at == std::string::npos) return std::nullopt;
  const std::string_view prefix(pattern.data(), at);
  const std::string_view suffix(pattern.data() + at + 10, pattern.size() - at - 10);
  if (choice.size() < prefix.size() + suffix.size() || choice.substr(0, prefix.size()) != prefix ||
      choice.substr(choice.size() - suffix.size()) != suffix) {
    return std::nullopt;
  }
  const auto middle = choice.substr(prefix.size(), choice.size() - prefix.size() - suffix.size());
  if (text::normalize_label(middle) == text::normalize_label(normal_phrase_)) {
    return std::string(kNormalLabel);
  }
  return taxonomy.canonical(middle);
}

const std::vector<std::string>& TemplateLibrary::stage_texts(StageKind k) const { return stage_texts_.at(k); }

// ---------------------------------------------------------------------------
// Question instantiation

std::vector<QuestionRecord> instantiate_questions(const VideoMeta& meta, const TemplateLibrary& lib,
                                                  const Taxonomy& taxonomy, Rng& rng) {
  auto category = taxonomy.canonical(meta.category);
  if (!category) throw PreconditionError("unknown category: " + meta.category);
  const bool abnormal = !Taxonomy::is_normal(*category);
  if (abnormal != meta.interval.has_value()) {
    throw PreconditionError("video meta needs an interval iff the category is abnormal");
  }
  const RiskLevel risk = meta.risk.value_or(taxonomy.risk_of(*category));

  // Distractor pool: siblings first, then "normal" for abnormal videos, then
  // every other leaf; each group shuffled.
  auto shuffled = [&](std::vector<std::string> v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
    return v;
  };

  std::vector<QuestionRecord> out;
  for (auto dim : {StageKind::Perception, StageKind::Cognition, StageKind::Action}) {
    for (bool mcq : {true, false}) {
      const auto candidates = lib.select(dim, mcq);
      if (candidates.empty()) {
        throw PreconditionError("template library lacks a " + std::string(vadr::to_string(dim)) +
                                (mcq ? " MCQ" : " open") + " template");
      }
      const auto* tmpl = candidates[uniform_index(rng, candidates.size())];

      QuestionRecord r;
      const int dim_index = depth_of(dim) - 1;
      r.kind = kAllQuestionKinds[dim_index + (mcq ? 0 : 3)];
      r.id = meta.video_id + "-" + std::string(vadr::to_string(r.kind));
      r.video_id = meta.video_id;
      r.question = tmpl->text;
      r.gold_category = *category;
      r.gold_interval = meta.interval;
      if (dim == StageKind::Action) r.gold_risk = risk;
      r.split = meta.split;

      std::string answer;
      if (mcq) {
        std::vector<std::string> pool = shuffled(taxonomy.siblings(*category));
        if (abnormal) pool.emplace_back(kNormalLabel);
        std::vector<std::string> rest;
        for (const auto& leaf : taxonomy.leaves()) {
          if (leaf.label != *category && std::find(pool.begin(), pool.end(), leaf.label) == pool.end()) {
            rest.push_back(leaf.label);
          }
        }
        for (auto& l : shuffled(std::move(rest))) pool.push_back(std::move(l));
        pool.resize(3);

        const std::size_t gold_pos = uniform_index(rng, 4);
        std::size_t next = 0;
        for (std::size_t i = 0; i < 4; ++i) {
          const char letter = static_cast<char>('A' + i);
          const auto& cat = i == gold_pos ? *category : pool[next++];
          r.choices.push_back({letter, lib.choice_text(dim, cat)});
        }
        r.gold_letter = static_cast<char>('A' + gold_pos);
        answer = std::string(1, *r.gold_letter);
      } else {
        r.reference_answer = lib.answer_text(dim, *category);
        answer = *r.reference_answer;
      }

      if (meta.split == Split::Sft) {
        grammar::StructuredResponse gold;
        for (int d = 1; d <= depth_of(dim); ++d) {
          const auto kind = static_cast<StageKind>(d);
          const auto& bank = lib.stage_texts(kind);
          gold.stages.push_back({kind, bank[uniform_index(rng, bank.size())]});
        }
        if (depth_of(dim) >= 2) gold.judgment = grammar::AnomalyJudgment{*category, meta.interval};
        if (dim == StageKind::Action) gold.risk = risk;
        gold.answer = answer;
        r.cot = grammar::render_response(gold);
      }
      out.push_back(std::move(r));
    }
  }
  // Emit in kind order: the three MCQs, then the three open questions.
  std::stable_sort(out.begin(), out.end(), [](const QuestionRecord& a, const QuestionRecord& b) {
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return out;
}

}  // namespace vadr::dataset
