// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "vadr/types.hpp"

namespace vadr {

struct TaxonomyLeaf {
  std::string label;
  std::string primary_type;
  std::string main_category;
  RiskLevel risk;
};

/// Three-level anomaly taxonomy (primary type -> main category -> leaf) with a
/// leaf -> risk map. "normal" is reserved and sits outside the tree.
///
/// Category ids: 0 is "normal", leaves follow in declaration order.
class Taxonomy {
 public:
  static constexpr std::size_t kLeafCount = 37;

  /// Stand-in taxonomy shipped with the engine (replaceable via JSON).
  static const Taxonomy& builtin();

  /// Throws ValidationError("Taxonomy", ...) on a malformed document.
  static Taxonomy from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<TaxonomyLeaf>& leaves() const noexcept { return leaves_; }

  /// Number of category ids including "normal".
  std::size_t category_count() const noexcept { return leaves_.size() + 1; }

  /// Canonical spelling for a label, matched case-insensitively with
  /// whitespace normalized. Includes "normal".
  std::optional<std::string> canonical(std::string_view label) const;

  std::optional<std::size_t> category_id(std::string_view label) const;
  const std::string& label_of(std::size_t category_id) const;

  static bool is_normal(std::string_view canonical_label) noexcept {
    return canonical_label == kNormalLabel;
  }

  /// Leaf risk; "normal" maps to normal_risk() (Low by default).
  RiskLevel risk_of(std::string_view label) const;
  RiskLevel normal_risk() const noexcept { return normal_risk_; }

  /// Other leaves under the same main category, in declaration order.
  std::vector<std::string> siblings(std::string_view label) const;

 private:
  std::vector<TaxonomyLeaf> leaves_;
  std::unordered_map<std::string, std::size_t> index_;  // normalized -> id
  std::string normal_label_{kNormalLabel};
  RiskLevel normal_risk_ = RiskLevel::Low;
};

}  // namespace vadr
