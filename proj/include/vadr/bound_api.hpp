// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "vadr/grammar.hpp"
#include "vadr/rewards.hpp"
#include "vadr/taxonomy.hpp"

// Document-in, document-out entry points over the pure kernels. Every
// function takes and returns UTF-8 JSON text and never throws: failures come
// back as {"error": {"class": ..., "message": ...}}. The CLI prints the same
// serializations, so outputs are byte-comparable across the two surfaces.
// Invalid UTF-8 inside payloads is written as U+FFFD.
namespace vadr::api {

/// {"ok": true, "depth": d, "response": {...}} or
/// {"ok": false, "depth": 0, "error": {"class", "offset", "message"}}.
nlohmann::ordered_json outcome_to_json(const grammar::ParseOutcome& outcome);

/// Raw response text in, the serialized outcome_to_json(...) out.
std::string bound_parse(std::string_view raw, const Taxonomy& taxonomy);

/// In:  {"records": [record, ...], "responses": ["raw", ...],
///       "config"?: RewardConfig overrides, "verification"?: [v, ...],
///       "groups"?: [size, ...]}
/// Out: {"breakdowns": [...], "advantages": [[...], ...]}
/// Group sizes must sum to the number of responses; advantages follow totals.
std::string bound_score(std::string_view doc, const Taxonomy& taxonomy);

/// In: {"rewards": [...], "std_floor"?: x}. Out: {"advantages": [...]}.
std::string bound_advantages(std::string_view doc);

/// In: {"candidate": "...", "reference": "..."}.
/// Out: {"bleu4", "rouge2": {precision, recall, f1}, "rougeL": {...}, "meteor_basic"}.
std::string bound_lexical(std::string_view doc);

/// In: {"inputs": [{"reasoning_ok", "answer_ok", "category_ok"?}], "triple"?: bool}.
/// Out: the joint report document.
std::string bound_joint(std::string_view doc);

}  // namespace vadr::api
