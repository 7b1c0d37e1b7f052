// SPDX-License-Identifier: Apache-2.0

#include "vadr/grammar.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "vadr/error.hpp"
#include "vadr/text.hpp"

namespace vadr::grammar {

namespace {

enum class TagName { Think, Answer, Perception, Cognition, Action, Which, When, Risk };

constexpr std::array<std::pair<std::string_view, TagName>, 8> kTags{{
    {"think", TagName::Think},
    {"answer", TagName::Answer},
    {"perception", TagName::Perception},
    {"cognition", TagName::Cognition},
    {"action", TagName::Action},
    {"which", TagName::Which},
    {"when", TagName::When},
    {"risk", TagName::Risk},
}};

struct Tag {
  TagName name;
  bool closing;
  std::size_t length;
};

std::optional<Tag> tag_at(std::string_view in, std::size_t pos) {
  if (pos >= in.size() || in[pos] != '<') return std::nullopt;
  std::size_t p = pos + 1;
  const bool closing = p < in.size() && in[p] == '/';
  if (closing) ++p;
  const std::size_t name_begin = p;
  while (p < in.size() && in[p] >= 'a' && in[p] <= 'z') ++p;
  if (p >= in.size() || in[p] != '>') return std::nullopt;
  const auto name = in.substr(name_begin, p - name_begin);
  for (const auto& [spelling, tag] : kTags) {
    if (spelling == name) return Tag{tag, closing, p + 1 - pos};
  }
  return std::nullopt;
}

/// Position of the next known tag at or after `from`, or npos.
std::size_t next_tag(std::string_view in, std::size_t from) {
  for (std::size_t p = in.find('<', from); p != std::string_view::npos;
       p = in.find('<', p + 1)) {
    if (tag_at(in, p)) return p;
  }
  return std::string_view::npos;
}

bool contains_tag(std::string_view s) { return next_tag(s, 0) != std::string_view::npos; }

std::optional<StageKind> stage_of(TagName t) {
  switch (t) {
    case TagName::Perception: return StageKind::Perception;
    case TagName::Cognition: return StageKind::Cognition;
    case TagName::Action: return StageKind::Action;
    default: return std::nullopt;
  }
}

std::optional<double> parse_real(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct Field {
  std::string_view payload;
  std::size_t offset;  // of the opening tag
};

class Parser {
 public:
  Parser(std::string_view in, const Taxonomy& taxonomy) : in_(in), taxonomy_(taxonomy) {}

  ParseOutcome run() {
    StructuredResponse resp;
    resp.raw = std::string(in_);

    skip_ws();
    auto open = tag_at(in_, pos_);
    if (!open || open->name != TagName::Think || open->closing) {
      return fail(ParseErrorClass::TagMismatch, pos_, "expected <think>");
    }
    pos_ += open->length;

    int last_depth = 0;
    std::array<bool, 4> seen{};
    for (;;) {
      skip_ws();
      if (pos_ >= in_.size()) {
        return fail(ParseErrorClass::TagMismatch, pos_, "unterminated <think>");
      }
      auto t = tag_at(in_, pos_);
      if (!t) return fail(ParseErrorClass::TagMismatch, pos_, "text outside a stage");
      if (t->name == TagName::Think && t->closing) {
        pos_ += t->length;
        break;
      }
      auto kind = stage_of(t->name);
      if (!kind || t->closing) {
        return fail(ParseErrorClass::TagMismatch, pos_, "unexpected tag inside <think>");
      }
      const int depth = depth_of(*kind);
      if (seen[depth]) return fail(ParseErrorClass::DuplicateStage, pos_, "repeated stage");
      if (depth < last_depth) {
        return fail(ParseErrorClass::StageOrdering, pos_, "stage out of order");
      }
      if (auto err = parse_stage(*kind, t->length, resp)) return *err;
      seen[depth] = true;
      last_depth = depth;
    }

    skip_ws();
    auto ans = tag_at(in_, pos_);
    if (!ans || ans->name != TagName::Answer || ans->closing) {
      return fail(ParseErrorClass::MissingAnswer, pos_, "expected <answer>");
    }
    const std::size_t body = pos_ + ans->length;
    const std::size_t close = next_tag(in_, body);
    if (close == std::string_view::npos) {
      return fail(ParseErrorClass::TagMismatch, pos_, "unterminated <answer>");
    }
    auto ct = tag_at(in_, close);
    if (ct->name != TagName::Answer || !ct->closing) {
      return fail(ParseErrorClass::TagMismatch, close, "unexpected tag inside <answer>");
    }
    const auto payload = in_.substr(body, close - body);
    if (text::trim(payload).empty()) {
      return fail(ParseErrorClass::MissingAnswer, body, "empty answer");
    }
    resp.answer = std::string(payload);
    pos_ = close + ct->length;
    skip_ws();
    if (pos_ != in_.size()) {
      return fail(ParseErrorClass::TagMismatch, pos_, "trailing content after </answer>");
    }
    return resp;
  }

 private:
  void skip_ws() {
    while (pos_ < in_.size() && text::is_space(in_[pos_])) ++pos_;
  }

  ParseOutcome fail(ParseErrorClass kind, std::size_t offset, std::string msg) const {
    return ParseError{kind, std::min(offset, in_.size()), std::move(msg)};
  }

  /// Parses one stage whose opening tag starts at pos_. Advances pos_ past
  /// the closing tag on success.
  std::optional<ParseOutcome> parse_stage(StageKind kind, std::size_t open_len,
                                          StructuredResponse& resp) {
    const std::size_t stage_offset = pos_;
    const TagName own = kind == StageKind::Perception  ? TagName::Perception
                        : kind == StageKind::Cognition ? TagName::Cognition
                                                       : TagName::Action;
    std::string prose;
    std::optional<Field> which, when, risk;

    std::size_t cursor = pos_ + open_len;
    for (;;) {
      const std::size_t p = next_tag(in_, cursor);
      if (p == std::string_view::npos) {
        return fail(ParseErrorClass::TagMismatch, stage_offset, "unterminated stage");
      }
      prose.append(in_.substr(cursor, p - cursor));
      const auto t = *tag_at(in_, p);
      if (t.name == own && t.closing) {
        pos_ = p + t.length;
        break;
      }
      std::optional<Field>* slot = nullptr;
      if (!t.closing) {
        if (kind == StageKind::Cognition && t.name == TagName::Which) slot = &which;
        if (kind == StageKind::Cognition && t.name == TagName::When) slot = &when;
        if (kind == StageKind::Action && t.name == TagName::Risk) slot = &risk;
      }
      if (slot == nullptr || slot->has_value()) {
        return fail(ParseErrorClass::TagMismatch, p, "unexpected tag inside stage");
      }
      const std::size_t body = p + t.length;
      const std::size_t close = next_tag(in_, body);
      if (close == std::string_view::npos) {
        return fail(ParseErrorClass::TagMismatch, p, "unterminated field");
      }
      const auto ct = *tag_at(in_, close);
      if (ct.name != t.name || !ct.closing) {
        return fail(ParseErrorClass::TagMismatch, close, "mismatched field close");
      }
      *slot = Field{in_.substr(body, close - body), p};
      cursor = close + ct.length;
    }

    if (which) {
      auto category = taxonomy_.canonical(which->payload);
      if (!category) {
        return fail(ParseErrorClass::UnknownCategory, which->offset, "category not in taxonomy");
      }
      AnomalyJudgment judgment{*category, std::nullopt};
      if (judgment.abnormal() && !when) {
        return fail(ParseErrorClass::BadInterval, which->offset, "abnormal judgment without <when>");
      }
      if (!judgment.abnormal() && when) {
        return fail(ParseErrorClass::BadInterval, when->offset, "<when> on a normal judgment");
      }
      if (when) {
        auto iv = parse_interval(when->payload);
        if (!iv) return fail(ParseErrorClass::BadInterval, when->offset, "malformed interval");
        judgment.interval = *iv;
      }
      resp.judgment = std::move(judgment);
    } else if (when) {
      return fail(ParseErrorClass::BadInterval, when->offset, "<when> without <which>");
    }
    if (risk) {
      auto level = parse_risk(risk->payload);
      if (!level) return fail(ParseErrorClass::BadRisk, risk->offset, "risk must be Low, Medium or High");
      resp.risk = *level;
    }
    resp.stages.push_back({kind, std::move(prose)});
    return std::nullopt;
  }

  static std::optional<TemporalInterval> parse_interval(std::string_view payload) {
    const auto comma = payload.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    auto s = parse_real(payload.substr(0, comma));
    auto e = parse_real(payload.substr(comma + 1));
    if (!s || !e) return std::nullopt;
    try {
      return TemporalInterval(*s, *e);
    } catch (const PreconditionError&) {
      return std::nullopt;
    }
  }

  std::string_view in_;
  const Taxonomy& taxonomy_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(ParseErrorClass c) noexcept {
  switch (c) {
    case ParseErrorClass::TagMismatch: return "TagMismatch";
    case ParseErrorClass::StageOrdering: return "StageOrdering";
    case ParseErrorClass::MissingAnswer: return "MissingAnswer";
    case ParseErrorClass::BadInterval: return "BadInterval";
    case ParseErrorClass::BadRisk: return "BadRisk";
    case ParseErrorClass::UnknownCategory: return "UnknownCategory";
    case ParseErrorClass::DuplicateStage: return "DuplicateStage";
  }
  return "?";
}

bool StructuredResponse::has_stage(StageKind k) const noexcept { return stage(k) != nullptr; }

const Stage* StructuredResponse::stage(StageKind k) const noexcept {
  for (const auto& s : stages) {
    if (s.kind == k) return &s;
  }
  return nullptr;
}

ParseOutcome parse_response(std::string_view raw, const Taxonomy& taxonomy) {
  return Parser(raw, taxonomy).run();
}

void check_invariants(const StructuredResponse& resp) {
  int last = 0;
  for (const auto& s : resp.stages) {
    if (depth_of(s.kind) <= last) throw PreconditionError("stages must strictly increase in depth");
    last = depth_of(s.kind);
    if (contains_tag(s.text)) throw PreconditionError("stage text contains a grammar tag");
  }
  if (resp.judgment) {
    if (!resp.has_stage(StageKind::Cognition)) throw PreconditionError("judgment without cognition stage");
    const auto& j = *resp.judgment;
    if (text::trim(j.category).empty() || contains_tag(j.category)) {
      throw PreconditionError("bad judgment category");
    }
    if (j.abnormal() != j.interval.has_value()) {
      throw PreconditionError("interval must be present iff the judgment is abnormal");
    }
  }
  if (resp.risk && !resp.has_stage(StageKind::Action)) {
    throw PreconditionError("risk without action stage");
  }
  if (text::trim(resp.answer).empty()) throw PreconditionError("empty answer");
  if (contains_tag(resp.answer)) throw PreconditionError("answer contains a grammar tag");
}

std::string render_response(const StructuredResponse& resp) {
  check_invariants(resp);
  std::string out = "<think>";
  for (const auto& s : resp.stages) {
    const auto name = to_string(s.kind);
    out += '<';
    out += name;
    out += '>';
    out += s.text;
    if (s.kind == StageKind::Cognition && resp.judgment) {
      out += "<which>" + resp.judgment->category + "</which>";
      if (resp.judgment->interval) {
        out += "<when>" + text::fixed6(resp.judgment->interval->start()) + "," +
               text::fixed6(resp.judgment->interval->end()) + "</when>";
      }
    }
    if (s.kind == StageKind::Action && resp.risk) {
      out += "<risk>";
      out += to_string(*resp.risk);
      out += "</risk>";
    }
    out += "</";
    out += name;
    out += '>';
  }
  out += "</think><answer>" + resp.answer + "</answer>";
  return out;
}

int reasoning_depth(const StructuredResponse& resp) noexcept {
  int depth = 0;
  for (const auto& s : resp.stages) depth = std::max(depth, depth_of(s.kind));
  return depth;
}

int reasoning_depth(const ParseOutcome& outcome) noexcept {
  const auto* r = outcome.response_if();
  return r ? reasoning_depth(*r) : 0;
}

}  // namespace vadr::grammar
