// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "vadr/grammar.hpp"
#include "vadr/rng.hpp"
#include "vadr/taxonomy.hpp"

namespace vadr::testing {

inline std::string random_payload(Rng& rng, std::size_t max_len, bool allow_empty = true) {
  static const std::string kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:!?'-()\"&/\n\t";
  const std::size_t lo = allow_empty ? 0 : 1;
  const std::size_t n = lo + uniform_index(rng, max_len - lo + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (uniform_index(rng, 40) == 0) {
      s += "\xc3\xa9";  // e-acute
    } else {
      s += kAlphabet[uniform_index(rng, kAlphabet.size())];
    }
  }
  return s;
}

inline double grid_point(Rng& rng) {
  return static_cast<double>(uniform_index(rng, 1000001)) / 1e6;
}

/// A random response that satisfies every grammar invariant.
inline grammar::StructuredResponse random_response(Rng& rng, const Taxonomy& tax) {
  grammar::StructuredResponse r;
  const std::size_t mask = 1 + uniform_index(rng, 7);
  for (int k = 1; k <= 3; ++k) {
    if (mask & (std::size_t{1} << (k - 1))) {
      r.stages.push_back({static_cast<StageKind>(k), random_payload(rng, 40)});
    }
  }
  if (r.has_stage(StageKind::Cognition) && uniform_index(rng, 5) != 0) {
    grammar::AnomalyJudgment j;
    const std::size_t id = uniform_index(rng, tax.category_count());
    j.category = tax.label_of(id);
    if (id != 0) {
      double a = grid_point(rng), b = grid_point(rng);
      if (a > b) std::swap(a, b);
      j.interval = TemporalInterval(a, b);
    }
    r.judgment = j;
  }
  if (r.has_stage(StageKind::Action) && uniform_index(rng, 5) != 0) {
    r.risk = static_cast<RiskLevel>(uniform_index(rng, 3));
  }
  do {
    r.answer = random_payload(rng, 20, /*allow_empty=*/false);
  } while (r.answer.find_first_not_of(" \n\t") == std::string::npos);
  return r;
}

inline std::string random_bytes(Rng& rng, std::size_t max_len) {
  const std::size_t n = uniform_index(rng, max_len + 1);
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(uniform_index(rng, 256));
  return s;
}

/// Byte soup biased toward grammar tags so the parser gets past the first byte.
inline std::string random_tag_soup(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> kPieces = {
      "<think>", "</think>", "<answer>", "</answer>", "<perception>", "</perception>",
      "<cognition>", "</cognition>", "<action>", "</action>", "<which>", "</which>",
      "<when>", "</when>", "<risk>", "</risk>", "Fighting", "normal", "High", "Low",
      "0.2,0.6", "1,0", "x", " ", "<", ">", "/", "A"};
  std::string s;
  while (s.size() < max_len) {
    if (uniform_index(rng, 12) == 0) break;
    if (uniform_index(rng, 6) == 0) {
      s += static_cast<char>(uniform_index(rng, 256));
    } else {
      s += kPieces[uniform_index(rng, kPieces.size())];
    }
  }
  if (s.size() > max_len) s.resize(max_len);
  return s;
}

/// A valid rendering with a few bytes overwritten, inserted or deleted.
inline std::string mutated_response(Rng& rng, const Taxonomy& tax) {
  std::string s = grammar::render_response(random_response(rng, tax));
  const std::size_t edits = 1 + uniform_index(rng, 3);
  for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
    const std::size_t at = uniform_index(rng, s.size());
    const char c = static_cast<char>(uniform_index(rng, 256));
    switch (uniform_index(rng, 3)) {
      case 0: s[at] = c; break;
      case 1: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), c); break;
      default: s.erase(at, 1); break;
    }
  }
  return s;
}

/// One fuzz input of at most `max_len` bytes, rotating through the generators.
inline std::string fuzz_input(Rng& rng, const Taxonomy& tax, std::size_t max_len, int i) {
  std::string s;
  switch (i % 3) {
    case 0: s = random_bytes(rng, max_len); break;
    case 1: s = random_tag_soup(rng, max_len); break;
    default: s = mutated_response(rng, tax); break;
  }
  if (s.size() > max_len) s.resize(max_len);
  return s;
}

}  // namespace vadr::testing
