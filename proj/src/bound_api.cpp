// SPDX-License-Identifier: Apache-2.0

#include "vadr/bound_api.hpp"

#include <cstdio>

#include "vadr/dataset.hpp"
#include "vadr/error.hpp"
#include "vadr/grpo.hpp"
#include "vadr/metrics.hpp"

namespace vadr::api {
namespace {

using Doc = nlohmann::ordered_json;

// Invalid UTF-8 in payloads becomes U+FFFD instead of a thrown type_error.
template <typename J>
std::string serialize(const J& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string error_doc(std::string_view cls, std::string_view message) {
  Doc j;
  j["error"] = {{"class", cls}, {"message", message}};
  return serialize(j);
}

// Parses the input document and runs `body`, mapping every failure to an
// error document.
template <typename F>
std::string guarded(std::string_view doc, F&& body) {
  nlohmann::json in;
  try {
    in = nlohmann::json::parse(doc);
  } catch (const nlohmann::json::exception& e) {
    return error_doc("Json", e.what());
  }
  try {
    return serialize(body(in));
  } catch (const ValidationError& e) {
    return error_doc(e.code(), e.detail());
  } catch (const PreconditionError& e) {
    return error_doc("Precondition", e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_doc("Schema", e.what());
  } catch (const std::exception& e) {
    return error_doc("Internal", e.what());
  }
}

Doc prf_json(const eval::PRF& s) {
  return Doc{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

nlohmann::ordered_json outcome_to_json(const grammar::ParseOutcome& outcome) {
  Doc j;
  j["ok"] = outcome.ok();
  j["depth"] = grammar::reasoning_depth(outcome);
  if (!outcome.ok()) {
    const auto& e = outcome.error();
    j["error"] = {{"class", grammar::to_string(e.kind)}, {"offset", e.offset}, {"message", e.message}};
    return j;
  }
  const auto& r = outcome.response();
  Doc stages = Doc::array();
  for (const auto& s : r.stages) stages.push_back({{"kind", to_string(s.kind)}, {"text", s.text}});
  Doc resp;
  resp["stages"] = std::move(stages);
  if (r.judgment) {
    Doc jd;
    jd["category"] = r.judgment->category;
    if (r.judgment->interval) {
      jd["interval"] = {r.judgment->interval->start(), r.judgment->interval->end()};
    } else {
      jd["interval"] = nullptr;
    }
    resp["judgment"] = std::move(jd);
  } else {
    resp["judgment"] = nullptr;
  }
  resp["risk"] = r.risk ? Doc(to_string(*r.risk)) : Doc(nullptr);
  resp["answer"] = r.answer;
  j["response"] = std::move(resp);
  return j;
}

std::string bound_parse(std::string_view raw, const Taxonomy& taxonomy) {
  return serialize(outcome_to_json(grammar::parse_response(raw, taxonomy)));
}

std::string bound_score(std::string_view doc, const Taxonomy& taxonomy) {
  return guarded(doc, [&](const nlohmann::json& in) {
    const auto& recs = in.at("records");
    const auto& resps = in.at("responses");
    if (recs.size() != resps.size()) {
      throw ValidationError("Alignment", std::to_string(recs.size()) + " records vs " +
                                             std::to_string(resps.size()) + " responses");
    }
    const auto cfg = in.contains("config") ? rewards::RewardConfig::from_json(in.at("config"))
                                           : rewards::RewardConfig{};
    cfg.validate();
    const nlohmann::json verification = in.value("verification", nlohmann::json::array());
    if (!verification.empty() && verification.size() != resps.size()) {
      throw ValidationError("Alignment", "verification list length differs from responses");
    }

    Doc out;
    out["breakdowns"] = Doc::array();
    std::vector<double> totals;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      auto rec = dataset::record_from_json(recs[i]);
      dataset::validate_record(rec, taxonomy);
      const double v = verification.empty() ? 0.0 : verification[i].get<double>();
      const auto b = rewards::score_response(grammar::parse_response(resps[i].get<std::string>(), taxonomy),
                                             rec, cfg, v);
      totals.push_back(b.total);
      out["breakdowns"].push_back(b.to_json());
    }

    out["advantages"] = Doc::array();
    if (in.contains("groups")) {
      std::size_t at = 0;
      for (const auto& g : in.at("groups")) {
        const auto n = g.get<std::size_t>();
        if (n == 0 || at + n > totals.size()) throw ValidationError("Alignment", "group sizes overrun responses");
        const std::vector<double> group(totals.begin() + static_cast<std::ptrdiff_t>(at),
                                        totals.begin() + static_cast<std::ptrdiff_t>(at + n));
        out["advantages"].push_back(grpo::compute_advantages(group));
        at += n;
      }
      if (at != totals.size()) throw ValidationError("Alignment", "group sizes do not cover all responses");
    }
    return out;
  });
}

std::string bound_advantages(std::string_view doc) {
  return guarded(doc, [](const nlohmann::json& in) {
    const auto rewards = in.at("rewards").get<std::vector<double>>();
    const double floor = in.value("std_floor", 1e-8);
    Doc out;
    out["advantages"] = grpo::compute_advantages(rewards, floor);
    return out;
  });
}

std::string bound_lexical(std::string_view doc) {
  return guarded(doc, [](const nlohmann::json& in) {
    const auto c = in.at("candidate").get<std::string>();
    const auto r = in.at("reference").get<std::string>();
    Doc out;
    out["bleu4"] = eval::bleu(c, r);
    out["rouge2"] = prf_json(eval::rouge(c, r, eval::RougeVariant::N2));
    out["rougeL"] = prf_json(eval::rouge(c, r, eval::RougeVariant::L));
    out["meteor_basic"] = eval::meteor_basic(c, r);
    return out;
  });
}

std::string bound_joint(std::string_view doc) {
  return guarded(doc, [](const nlohmann::json& in) {
    std::vector<eval::JointInput> inputs;
    for (const auto& x : in.at("inputs")) {
      eval::JointInput ji{x.at("reasoning_ok").get<bool>(), x.at("answer_ok").get<bool>(), std::nullopt};
      if (x.contains("category_ok") && !x.at("category_ok").is_null()) ji.category_ok = x.at("category_ok").get<bool>();
      inputs.push_back(ji);
    }
    return eval::joint_outcomes(inputs, in.value("triple", true)).to_json();
  });
}

}  // namespace vadr::api
