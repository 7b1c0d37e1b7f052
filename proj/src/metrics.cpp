// SPDX-License-Identifier: Apache-2.0

#include "vadr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vadr/error.hpp"
#include "vadr/rewards.hpp"
#include "vadr/text.hpp"

namespace vadr::eval {

namespace {

using Tokens = std::vector<std::string>;

std::map<Tokens, int> ngrams(const Tokens& t, std::size_t n) {
  std::map<Tokens, int> out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + static_cast<long>(i),
                                                               t.begin() + static_cast<long>(i + n))];
  return out;
}

int clipped_overlap(const std::map<Tokens, int>& cand, const std::map<Tokens, int>& ref) {
  int m = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

PRF make_prf(double overlap, double cand_total, double ref_total) {
  PRF s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1 || max_n > 4) throw PreconditionError("BLEU order must lie in 1..4");
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  if (c.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cn = ngrams(c, static_cast<std::size_t>(n));
    const auto rn = ngrams(r, static_cast<std::size_t>(n));
    const double total = c.size() >= static_cast<std::size_t>(n) ? static_cast<double>(c.size() - n + 1) : 0.0;
    const double m = clipped_overlap(cn, rn);
    double p;
    if (n == 1) {
      if (m == 0) return 0.0;
      p = m / total;
    } else {
      p = (m + 1.0) / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size())));
  return bp * std::exp(log_sum / max_n);
}

PRF rouge(std::string_view candidate, std::string_view reference, RougeVariant variant) {
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  if (variant == RougeVariant::N2) {
    const auto cn = ngrams(c, 2);
    const auto rn = ngrams(r, 2);
    const double ct = c.size() >= 2 ? static_cast<double>(c.size() - 1) : 0.0;
    const double rt = r.size() >= 2 ? static_cast<double>(r.size() - 1) : 0.0;
    return make_prf(clipped_overlap(cn, rn), ct, rt);
  }
  std::vector<std::vector<int>> dp(c.size() + 1, std::vector<int>(r.size() + 1, 0));
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      dp[i][j] = c[i - 1] == r[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return make_prf(dp[c.size()][r.size()], static_cast<double>(c.size()), static_cast<double>(r.size()));
}

double meteor_basic(std::string_view candidate, std::string_view reference) {
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  std::vector<char> used(r.size(), 0);
  int matches = 0, chunks = 0;
  long prev = -2;  // reference position of the previous aligned candidate token
  for (const auto& tok : c) {
    long pick = -1;
    const auto next = static_cast<std::size_t>(prev + 1);
    if (prev >= 0 && next < r.size() && !used[next] && r[next] == tok) {
      pick = static_cast<long>(next);
    } else {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!used[j] && r[j] == tok) {
          pick = static_cast<long>(j);
          break;
        }
      }
    }
    if (pick < 0) {
      prev = -2;
      continue;
    }
    used[static_cast<std::size_t>(pick)] = 1;
    if (pick != prev + 1 || prev < 0) ++chunks;
    ++matches;
    prev = pick;
  }
  if (matches == 0) return 0.0;
  const double p = static_cast<double>(matches) / static_cast<double>(c.size());
  const double rc = static_cast<double>(matches) / static_cast<double>(r.size());
  const double f = 10.0 * p * rc / (rc + 9.0 * p);
  const double frag = static_cast<double>(chunks) / matches;
  return f * (1.0 - 0.5 * frag * frag * frag);
}

bool EvalRecord::answer_correct(double open_threshold) const {
  const auto* r = prediction.response_if();
  if (r == nullptr) return false;
  if (is_mcq(question.kind)) {
    return question.gold_letter && rewards::extract_option_letter(r->answer) == question.gold_letter;
  }
  return question.reference_answer && rewards::token_f1(r->answer, *question.reference_answer) >= open_threshold;
}

bool EvalRecord::category_correct() const {
  const auto* r = prediction.response_if();
  return r != nullptr && r->judgment && r->judgment->category == question.gold_category;
}

bool EvalRecord::risk_correct() const {
  const auto* r = prediction.response_if();
  return r != nullptr && question.gold_risk && r->risk == question.gold_risk;
}

bool EvalRecord::depth_aligned() const {
  return grammar::reasoning_depth(prediction) == grammar::expected_depth(question.kind);
}

EvalRecord make_eval_record(const dataset::QuestionRecord& q, std::string raw, const Taxonomy& taxonomy) {
  auto outcome = grammar::parse_response(raw, taxonomy);
  return EvalRecord{q, std::move(outcome), std::move(raw), std::nullopt};
}

double mcq_accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw PreconditionError("MCQ accuracy over no records");
  std::size_t ok = 0;
  for (const auto& r : records) {
    if (!is_mcq(r.question.kind)) throw PreconditionError("record " + r.question.id + " is not MCQ");
    ok += r.answer_correct() ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double depth_alignment(const std::vector<EvalRecord>& records) {
  if (records.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.depth_aligned() ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

std::string JointReport::row() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f/%.3f/%.3f/%.3f", rr, rw, wr, ww);
  return buf;
}

nlohmann::ordered_json JointReport::to_json() const {
  nlohmann::ordered_json j;
  j["RR"] = rr;
  j["RW"] = rw;
  j["WR"] = wr;
  j["WW"] = ww;
  j["RRR"] = opt(rrr);
  j["WWW"] = opt(www);
  j["counts"] = {{"RR", counts.rr},   {"RW", counts.rw},   {"WR", counts.wr},        {"WW", counts.ww},
                 {"RRR", counts.rrr}, {"WWW", counts.www}, {"total", counts.total()}};
  return j;
}

JointReport joint_outcomes(const std::vector<JointInput>& inputs, bool triple) {
  JointReport rep;
  auto& c = rep.counts;
  for (const auto& in : inputs) {
    if (triple && !in.category_ok) throw PreconditionError("triple outcome needs category_ok on every input");
    if (in.reasoning_ok && in.answer_ok) {
      ++c.rr;
      if (triple && *in.category_ok) ++c.rrr;
    } else if (in.reasoning_ok) {
      ++c.rw;
    } else if (in.answer_ok) {
      ++c.wr;
    } else {
      ++c.ww;
      if (triple && !*in.category_ok) ++c.www;
    }
  }
  const auto n = static_cast<double>(c.total());
  if (n == 0) return rep;
  rep.rr = c.rr / n;
  rep.rw = c.rw / n;
  rep.wr = c.wr / n;
  rep.ww = c.ww / n;
  if (triple) {
    rep.rrr = c.rrr / n;
    rep.www = c.www / n;
  }
  return rep;
}

nlohmann::ordered_json StageReport::to_json() const {
  nlohmann::ordered_json j;
  j["identification"] = opt(identification);
  j["interpretation"] = opt(interpretation);
  j["category_accuracy"] = opt(category_accuracy);
  j["appropriateness"] = opt(appropriateness);
  j["risk_accuracy"] = opt(risk_accuracy);
  return j;
}

StageReport stage_report(const std::vector<EvalRecord>& records, oracle::Judge* judge) {
  std::vector<double> ident, interp, cat, approp, risk;
  bool judge_ok = judge != nullptr;
  auto ask = [&](const EvalRecord& r, oracle::Rubric rubric, std::vector<double>& into) {
    if (!judge_ok) return;
    try {
      into.push_back(judge->assess(r.raw, oracle::JudgeGold::from(r.question), rubric));
    } catch (const OracleUnavailable&) {
      judge_ok = false;
    }
  };
  for (const auto& r : records) {
    switch (dimension_of(r.question.kind)) {
      case StageKind::Perception: ask(r, oracle::Rubric::Identification, ident); break;
      case StageKind::Cognition:
        cat.push_back(r.category_correct() ? 1.0 : 0.0);
        ask(r, oracle::Rubric::Interpretation, interp);
        break;
      case StageKind::Action:
        risk.push_back(r.risk_correct() ? 1.0 : 0.0);
        ask(r, oracle::Rubric::Appropriateness, approp);
        break;
    }
  }
  StageReport rep;
  auto fill = [](const std::vector<double>& v) { return v.empty() ? std::nullopt : std::optional(mean(v)); };
  rep.category_accuracy = fill(cat);
  rep.risk_accuracy = fill(risk);
  if (judge_ok) {
    rep.identification = fill(ident);
    rep.interpretation = fill(interp);
    rep.appropriateness = fill(approp);
  }
  return rep;
}

nlohmann::ordered_json evaluate(const std::vector<EvalRecord>& records, oracle::Judge* judge,
                                const Taxonomy& taxonomy, const EvalOptions& opts) {
  oracle::RuleJudge rule(taxonomy, opts.open_answer_threshold);
  std::vector<EvalRecord> mcq;
  std::vector<double> b4, r2, rl, met;
  std::vector<JointInput> joint;
  bool judge_ok = judge != nullptr;
  for (const auto& r : records) {
    if (is_mcq(r.question.kind)) {
      mcq.push_back(r);
    } else {
      const auto* resp = r.prediction.response_if();
      const std::string answer = resp ? resp->answer : std::string();
      const auto& ref = r.question.reference_answer.value_or("");
      b4.push_back(bleu(answer, ref, 4));
      r2.push_back(rouge(answer, ref, RougeVariant::N2).f1);
      rl.push_back(rouge(answer, ref, RougeVariant::L).f1);
      met.push_back(meteor_basic(answer, ref));
    }
    bool reasoning;
    if (r.reasoning_correct) {
      reasoning = *r.reasoning_correct;
    } else {
      double v = -1.0;
      if (judge_ok) {
        try {
          v = judge->assess(r.raw, oracle::JudgeGold::from(r.question), oracle::Rubric::ReasoningCorrect);
        } catch (const OracleUnavailable&) {
          judge_ok = false;
        }
      }
      if (v < 0.0) v = rule.assess(r.raw, oracle::JudgeGold::from(r.question), oracle::Rubric::ReasoningCorrect);
      reasoning = v >= 0.5;
    }
    joint.push_back({reasoning, r.answer_correct(opts.open_answer_threshold), r.category_correct()});
  }

  nlohmann::ordered_json doc;
  doc["records"] = records.size();
  nlohmann::ordered_json answer;
  answer["mcq_accuracy"] = mcq.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mcq_accuracy(mcq));
  answer["open_records"] = b4.size();
  answer["bleu4"] = b4.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mean(b4));
  answer["rouge2_f1"] = r2.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mean(r2));
  answer["rougeL_f1"] = rl.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mean(rl));
  answer["meteor_basic"] = met.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(mean(met));
  doc["answer"] = std::move(answer);
  doc["stage"] = stage_report(records, judge_ok ? judge : &rule).to_json();
  doc["stage"]["judge"] = judge_ok ? "external" : "rule";
  doc["joint"] = joint_outcomes(joint).to_json();
  doc["depth_alignment"] = depth_alignment(records);
  std::size_t valid = 0;
  for (const auto& r : records) valid += r.prediction.ok() ? 1 : 0;
  doc["format_validity"] = records.empty() ? 0.0 : static_cast<double>(valid) / records.size();
  return doc;
}

}  // namespace vadr::eval
