// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vadr/dataset.hpp"
#include "vadr/grammar.hpp"
#include "vadr/grpo.hpp"
#include "vadr/oracle.hpp"
#include "vadr/policy.hpp"
#include "vadr/taxonomy.hpp"
#include "vadr/timeline.hpp"

namespace vadr::sim {

inline constexpr int kNormalSymbols = 4;
inline constexpr int kDefaultBudget = 16;
inline constexpr double kIntervalGrid = 0.05;
inline constexpr int kIntervalBuckets = 21;  // 0.00, 0.05, ..., 1.00

std::string normal_symbol(int i);
std::string anomaly_symbol(std::string_view category);
/// The category an anomaly symbol names, if it is one.
std::optional<std::string> symbol_category(std::string_view symbol);

struct PlantedAnomaly {
  std::string category;
  TemporalInterval interval;
  bool operator==(const PlantedAnomaly&) const = default;
};

struct SyntheticVideo {
  std::string id;
  std::vector<std::string> frames;  // event symbols, uniformly spaced in time
  std::optional<PlantedAnomaly> anomaly;
  std::optional<RiskLevel> risk;
  dataset::Split split = dataset::Split::Test;

  VideoTimeline timeline() const { return VideoTimeline::uniform(frames); }
};

struct CorpusSpec {
  /// Videos per anomaly leaf (canonical label -> count).
  std::map<std::string, int> per_category;
  int normal_videos = 0;
  int frames_per_video = 61;
  double min_length = 0.15;
  double max_length = 0.45;
  /// Stratified per category; rl receives the remainder.
  double sft_fraction = 0.25;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;

  /// `per_leaf` videos for every taxonomy leaf plus `normal` normal videos.
  static CorpusSpec uniform(const Taxonomy& taxonomy, int per_leaf, int normal, std::uint64_t seed);
};

struct Corpus {
  std::vector<SyntheticVideo> videos;
  std::vector<dataset::QuestionRecord> records;

  /// {"<video id>": ["symbol", ...], ...}
  nlohmann::ordered_json sidecar() const;
};

/// Deterministic under spec.seed. Throws PreconditionError when the interval
/// range is infeasible (no grid length in range, or too few frames).
Corpus generate_corpus(const CorpusSpec& spec, const Taxonomy& taxonomy, const dataset::TemplateLibrary& lib);

/// Video id -> frame symbols, as written by Corpus::sidecar.
std::map<std::string, std::vector<std::string>> load_sidecar(const std::filesystem::path& path);

/// Samples frames at round(k (N-1) / (budget-1)); every frame when N <= budget.
FeatureVector observe(const VideoTimeline& timeline, int budget = kDefaultBudget);
inline FeatureVector observe(const SyntheticVideo& v, int budget = kDefaultBudget) {
  return observe(v.timeline(), budget);
}

PolicyInput make_input(const FeatureVector& features, const dataset::QuestionRecord& q);

/// Factored log-linear policy over structured responses. Token order:
///   depth, perception text,
///   [category, cognition text, [start bucket, end bucket]]   depth >= 2
///   [risk, action text]                                       depth 3
///   answer letter (MCQ) or answer subject category (open)
/// Every emission renders to grammar-valid text.
class ToyPolicy final : public LogLinearPolicy {
 public:
  ToyPolicy(const Taxonomy& taxonomy, const dataset::TemplateLibrary& lib, std::vector<double> theta = {});

  static std::size_t parameter_count(const Taxonomy& taxonomy);

  /// Hand-set parameters that follow the evidence: expected depth per kind,
  /// category = most frequent anomaly symbol (normal when none), an interval
  /// padded two grid steps around the observed anomaly frames, mapped risk,
  /// and the answer matching that category.
  static std::vector<double> evidence_following(const Taxonomy& taxonomy, const dataset::TemplateLibrary& lib,
                                                double strength = 12.0);

  PolicyPtr with_parameters(std::vector<double> theta) const override;
  std::optional<Factor> next_factor(const PolicyInput& in, std::span<const int> prefix) const override;
  std::string decode(const PolicyInput& in, std::span<const int> tokens) const override;

  /// Structured form of a token sequence.
  grammar::StructuredResponse to_response(const PolicyInput& in, std::span<const int> tokens) const;
  /// Inverse of to_response. Throws PreconditionError when the response
  /// cannot be emitted (text outside the bank, off-grid interval, ...).
  std::vector<int> encode(const PolicyInput& in, const grammar::StructuredResponse& resp) const;

  const Taxonomy& taxonomy() const noexcept { return *taxonomy_; }

  struct Layout;

 private:
  const Taxonomy* taxonomy_;
  const dataset::TemplateLibrary* lib_;
};

struct StructuredSample {
  std::string text;
  std::vector<int> tokens;
  std::vector<double> logps;
};

StructuredSample sample_structured(const ToyPolicy& policy, const FeatureVector& features,
                                   const dataset::QuestionRecord& q, Rng& rng, bool greedy);

/// Wraps a policy snapshot plus observe() as a PolicyOracle. Non-greedy
/// queries draw from an internal stream seeded at construction.
class InProcessOracle final : public oracle::PolicyOracle {
 public:
  InProcessOracle(PolicyPtr policy, int budget = kDefaultBudget, std::uint64_t seed = 0)
      : policy_(std::move(policy)), budget_(budget), rng_(seed) {}
  std::string query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                    bool greedy) override;

 private:
  PolicyPtr policy_;
  int budget_;
  Rng rng_;
};

/// RolloutEnv over a set of synthetic timelines.
class SimEnv final : public grpo::RolloutEnv {
 public:
  SimEnv(const Taxonomy& taxonomy, std::map<std::string, VideoTimeline> timelines, int budget = kDefaultBudget);
  static SimEnv from_corpus(const Taxonomy& taxonomy, const Corpus& corpus, int budget = kDefaultBudget);

  PolicyInput input_for(const dataset::QuestionRecord& q) const override;
  const VideoTimeline& timeline_for(const dataset::QuestionRecord& q) const override;
  const Taxonomy& taxonomy() const override { return *taxonomy_; }
  std::unique_ptr<oracle::PolicyOracle> make_oracle(PolicyPtr snapshot) const override;

 private:
  const Taxonomy* taxonomy_;
  std::map<std::string, VideoTimeline> timelines_;
  std::map<std::string, FeatureVector> features_;
  int budget_;
};

/// Teacher-forcing examples from records carrying a cot.
std::vector<grpo::SftBatch> make_sft_batches(const std::vector<dataset::QuestionRecord>& records,
                                             const grpo::RolloutEnv& env, const ToyPolicy& policy);

/// Records of one split.
std::vector<dataset::QuestionRecord> filter_split(const std::vector<dataset::QuestionRecord>& records,
                                                  dataset::Split split);

/// Greedy responses for each record, aligned with `records`.
std::vector<std::string> greedy_responses(const Policy& policy, const std::vector<dataset::QuestionRecord>& records,
                                          const grpo::RolloutEnv& env);

/// Settings for the desk-scale pipeline: light SFT (300 steps, lr 0.03,
/// batch 8) followed by RL (500 steps, lr 1.0, batch 4, G = 4).
grpo::GrpoConfig desk_sft_config();
grpo::GrpoConfig desk_rl_config();

/// Policy parameters as {"type": "toy", "parameters": [...]}.
nlohmann::json policy_to_json(const ToyPolicy& policy);
std::shared_ptr<const ToyPolicy> policy_from_json(const nlohmann::json& doc, const Taxonomy& taxonomy,
                                                  const dataset::TemplateLibrary& lib);

}  // namespace vadr::sim
