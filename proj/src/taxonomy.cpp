// SPDX-License-Identifier: Apache-2.0

#include "vadr/taxonomy.hpp"

#include "vadr/error.hpp"
#include "vadr/text.hpp"

namespace vadr {

namespace {

// Stand-in leaf set. The real benchmark's 37 leaves are published separately;
// this list keeps the same three primary types and the same leaf count.
constexpr const char* kBuiltin = R"json({
  "normal_risk": "Low",
  "types": [
    {"name": "Human Activity Anomaly", "categories": [
      {"name": "Violence", "leaves": [
        {"label": "Fighting", "risk": "High"},
        {"label": "Assault", "risk": "High"},
        {"label": "Shooting", "risk": "High"},
        {"label": "Abuse", "risk": "High"},
        {"label": "Riot", "risk": "High"}]},
      {"name": "Crime", "leaves": [
        {"label": "Robbery", "risk": "High"},
        {"label": "Burglary", "risk": "Medium"},
        {"label": "Stealing", "risk": "Medium"},
        {"label": "Shoplifting", "risk": "Low"},
        {"label": "Vandalism", "risk": "Medium"},
        {"label": "Arson", "risk": "High"}]},
      {"name": "Traffic Violation", "leaves": [
        {"label": "Jaywalking", "risk": "Low"},
        {"label": "Wrong-Way Driving", "risk": "High"},
        {"label": "Illegal Parking", "risk": "Low"},
        {"label": "Running Red Light", "risk": "Medium"}]},
      {"name": "Abnormal Behavior", "leaves": [
        {"label": "Loitering", "risk": "Low"},
        {"label": "Falling", "risk": "Medium"},
        {"label": "Climbing", "risk": "Medium"},
        {"label": "Chasing", "risk": "Medium"},
        {"label": "Trespassing", "risk": "Medium"}]}]},
    {"name": "Environmental Anomaly", "categories": [
      {"name": "Disaster", "leaves": [
        {"label": "Fire", "risk": "High"},
        {"label": "Explosion", "risk": "High"},
        {"label": "Flood", "risk": "High"},
        {"label": "Landslide", "risk": "High"},
        {"label": "Earthquake", "risk": "High"}]},
      {"name": "Hazard", "leaves": [
        {"label": "Smoke", "risk": "Medium"},
        {"label": "Water Leakage", "risk": "Low"},
        {"label": "Power Outage", "risk": "Low"}]}]},
    {"name": "Object-Related Anomaly", "categories": [
      {"name": "Vehicle", "leaves": [
        {"label": "Traffic Accident", "risk": "High"},
        {"label": "Vehicle Breakdown", "risk": "Low"},
        {"label": "Vehicle on Sidewalk", "risk": "Medium"}]},
      {"name": "Object", "leaves": [
        {"label": "Abandoned Object", "risk": "Medium"},
        {"label": "Falling Object", "risk": "Medium"},
        {"label": "Object Collision", "risk": "Medium"},
        {"label": "Obstacle on Road", "risk": "Medium"},
        {"label": "Cargo Spill", "risk": "Low"},
        {"label": "Structural Collapse", "risk": "High"}]}]}
  ]
})json";

RiskLevel risk_field(const nlohmann::json& j, std::string_view where) {
  if (!j.is_string()) throw ValidationError("Taxonomy", std::string(where) + ": risk must be a string");
  auto r = parse_risk(j.get<std::string>());
  if (!r) throw ValidationError("Taxonomy", std::string(where) + ": unknown risk " + j.dump());
  return *r;
}

}  // namespace

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy t = from_json(nlohmann::json::parse(kBuiltin));
  return t;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& doc) {
  Taxonomy t;
  try {
    if (doc.contains("normal_risk")) t.normal_risk_ = risk_field(doc.at("normal_risk"), "normal_risk");
    t.index_.emplace(std::string(kNormalLabel), 0);
    for (const auto& type : doc.at("types")) {
      const auto primary = type.at("name").get<std::string>();
      for (const auto& cat : type.at("categories")) {
        const auto main = cat.at("name").get<std::string>();
        for (const auto& leaf : cat.at("leaves")) {
          auto label = leaf.at("label").get<std::string>();
          const auto key = text::normalize_label(label);
          if (key.empty()) throw ValidationError("Taxonomy", "empty leaf label");
          if (!t.index_.emplace(key, t.leaves_.size() + 1).second) {
            throw ValidationError("Taxonomy", "duplicate or reserved label: " + label);
          }
          t.leaves_.push_back({std::move(label), primary, main, risk_field(leaf.at("risk"), key)});
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("Taxonomy", e.what());
  }
  if (t.leaves_.size() != kLeafCount) {
    throw ValidationError("Taxonomy", "expected " + std::to_string(kLeafCount) +
                                          " leaves, got " + std::to_string(t.leaves_.size()));
  }
  return t;
}

nlohmann::json Taxonomy::to_json() const {
  nlohmann::ordered_json types = nlohmann::ordered_json::array();
  for (const auto& leaf : leaves_) {
    if (types.empty() || types.back()["name"] != leaf.primary_type) {
      types.push_back({{"name", leaf.primary_type}, {"categories", nlohmann::ordered_json::array()}});
    }
    auto& cats = types.back()["categories"];
    if (cats.empty() || cats.back()["name"] != leaf.main_category) {
      cats.push_back({{"name", leaf.main_category}, {"leaves", nlohmann::ordered_json::array()}});
    }
    cats.back()["leaves"].push_back({{"label", leaf.label}, {"risk", to_string(leaf.risk)}});
  }
  nlohmann::ordered_json doc;
  doc["normal_risk"] = to_string(normal_risk_);
  doc["types"] = std::move(types);
  return nlohmann::json::parse(doc.dump());
}

std::optional<std::size_t> Taxonomy::category_id(std::string_view label) const {
  auto it = index_.find(text::normalize_label(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Taxonomy::canonical(std::string_view label) const {
  auto id = category_id(label);
  if (!id) return std::nullopt;
  return label_of(*id);
}

const std::string& Taxonomy::label_of(std::size_t id) const {
  if (id == 0) return normal_label_;
  if (id > leaves_.size()) throw PreconditionError("category id out of range");
  return leaves_[id - 1].label;
}

RiskLevel Taxonomy::risk_of(std::string_view label) const {
  auto id = category_id(label);
  if (!id) throw PreconditionError("unknown category: " + std::string(label));
  return *id == 0 ? normal_risk_ : leaves_[*id - 1].risk;
}

std::vector<std::string> Taxonomy::siblings(std::string_view label) const {
  std::vector<std::string> out;
  auto id = category_id(label);
  if (!id || *id == 0) return out;
  const auto& self = leaves_[*id - 1];
  for (const auto& leaf : leaves_) {
    if (leaf.main_category == self.main_category && leaf.label != self.label) {
      out.push_back(leaf.label);
    }
  }
  return out;
}

}  // namespace vadr
