// SPDX-License-Identifier: Apache-2.0

#include "vadr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vadr/error.hpp"

namespace vadr::sim {

namespace {

constexpr std::string_view kAnomalyPrefix = "anomaly:";
constexpr int kOffsetBins = 9;  // relative offsets -4..4 in grid steps

enum class Slot { Depth, PText, Category, CText, Start, End, Risk, AText, Answer, Done };

// Which decision token `index` makes, given the decisions before it.
Slot slot_at(std::span<const int> prefix, std::size_t index) {
  std::vector<Slot> seq{Slot::Depth, Slot::PText};
  if (prefix.empty()) return index < seq.size() ? seq[index] : Slot::Done;
  const int depth = prefix[0] + 1;
  if (depth >= 2) {
    seq.push_back(Slot::Category);
    seq.push_back(Slot::CText);
    if (prefix.size() <= 2) return index < seq.size() ? seq[index] : Slot::Done;
    if (prefix[2] != 0) {
      seq.push_back(Slot::Start);
      seq.push_back(Slot::End);
    }
  }
  if (depth == 3) {
    seq.push_back(Slot::Risk);
    seq.push_back(Slot::AText);
  }
  seq.push_back(Slot::Answer);
  return index < seq.size() ? seq[index] : Slot::Done;
}

// Position of each slot's token within a full or partial sequence.
std::size_t position_of(std::span<const int> tokens, Slot s) {
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (slot_at(tokens, i) == s) return i;
  }
  return static_cast<std::size_t>(-1);
}

struct Evidence {
  std::vector<std::size_t> present;  // category ids with at least one sampled frame
  std::size_t dominant = 0;          // most frequent anomaly category, 0 when none
  std::optional<double> first;       // earliest sampled anomaly timestamp
  std::optional<double> last;
};

Evidence evidence_of(const FeatureVector& fv, const Taxonomy& tax) {
  Evidence ev;
  int best = 0;
  for (const auto& [sym, n] : fv.counts) {
    if (n <= 0) continue;
    auto cat = symbol_category(sym);
    if (!cat) continue;
    auto id = tax.category_id(*cat);
    if (!id || *id == 0) continue;
    ev.present.push_back(*id);
    if (n > best || (n == best && *id < ev.dominant)) {
      best = n;
      ev.dominant = *id;
    }
  }
  std::sort(ev.present.begin(), ev.present.end());
  for (const auto& f : fv.samples) {
    if (!symbol_category(f.token)) continue;
    if (!ev.first) ev.first = f.timestamp;
    ev.last = f.timestamp;
  }
  return ev;
}

int offset_bin(int bucket, double anchor) {
  const long off = std::lround((bucket * kIntervalGrid - anchor) / kIntervalGrid);
  return static_cast<int>(std::clamp(off, -4L, 4L));
}

[[noreturn]] void inexpressible(const std::string& why) {
  throw PreconditionError("response not expressible by the toy policy: " + why);
}

}  // namespace

struct ToyPolicy::Layout {
  std::size_t cats;  // category ids including normal
  std::size_t depth, ptext, ctext, atext, category, start, end, risk, match, pos, copy, subject, total;

  // A category head holds: agree (candidate observed), none (normal without
  // anomaly evidence), then one bias per category.
  static constexpr std::size_t kAgree = 0, kNone = 1, kBias = 2;

  explicit Layout(const Taxonomy& tax) {
    cats = tax.category_count();
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
      const std::size_t here = at;
      at += n;
      return here;
    };
    depth = take(6 * 3);
    ptext = take(3);
    ctext = take(3);
    atext = take(3);
    category = take(kBias + cats);
    start = take(kOffsetBins + 1 + kIntervalBuckets);
    end = take(kOffsetBins + 1 + kIntervalBuckets);
    risk = take(1 + 3);  // mapped-level weight, level biases
    match = take(3);
    pos = take(4);
    copy = take(3);
    subject = take(kBias + cats);
    total = at;
  }
};

std::string normal_symbol(int i) { return "normal_" + std::to_string(i); }

std::string anomaly_symbol(std::string_view category) { return std::string(kAnomalyPrefix) + std::string(category); }

std::optional<std::string> symbol_category(std::string_view symbol) {
  if (symbol.substr(0, kAnomalyPrefix.size()) != kAnomalyPrefix) return std::nullopt;
  return std::string(symbol.substr(kAnomalyPrefix.size()));
}

CorpusSpec CorpusSpec::uniform(const Taxonomy& taxonomy, int per_leaf, int normal, std::uint64_t seed) {
  CorpusSpec s;
  for (const auto& leaf : taxonomy.leaves()) s.per_category[leaf.label] = per_leaf;
  s.normal_videos = normal;
  s.seed = seed;
  return s;
}

nlohmann::ordered_json Corpus::sidecar() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& v : videos) j[v.id] = v.frames;
  return j;
}

Corpus generate_corpus(const CorpusSpec& spec, const Taxonomy& taxonomy, const dataset::TemplateLibrary& lib) {
  if (spec.frames_per_video < 2) throw PreconditionError("need at least 2 frames per video");
  if (!(spec.min_length > 0.0 && spec.min_length <= spec.max_length && spec.max_length <= 1.0)) {
    throw PreconditionError("anomaly length range must satisfy 0 < min <= max <= 1");
  }
  const int lo = static_cast<int>(std::ceil(spec.min_length / kIntervalGrid - 1e-9));
  const int hi = static_cast<int>(std::floor(spec.max_length / kIntervalGrid + 1e-9));
  if (lo > hi) throw PreconditionError("no grid-aligned anomaly length in range");
  if (1.0 / (spec.frames_per_video - 1) > lo * kIntervalGrid + 1e-12) {
    throw PreconditionError("too few frames to place a frame inside every anomaly");
  }
  if (spec.sft_fraction < 0.0 || spec.test_fraction < 0.0 || spec.sft_fraction + spec.test_fraction > 1.0) {
    throw PreconditionError("split fractions must be >= 0 and sum to <= 1");
  }

  std::vector<std::pair<std::string, int>> groups;
  for (const auto& leaf : taxonomy.leaves()) {
    auto it = spec.per_category.find(leaf.label);
    if (it != spec.per_category.end() && it->second > 0) groups.emplace_back(leaf.label, it->second);
  }
  for (const auto& [label, n] : spec.per_category) {
    if (!taxonomy.canonical(label) || Taxonomy::is_normal(label)) {
      throw PreconditionError("corpus spec names unknown category: " + label);
    }
    if (n < 0) throw PreconditionError("negative video count for " + label);
  }
  if (spec.normal_videos > 0) groups.emplace_back(std::string(kNormalLabel), spec.normal_videos);
  if (groups.empty()) throw PreconditionError("corpus spec asks for no videos");

  Rng rng(spec.seed);
  Corpus corpus;
  int serial = 0;
  for (const auto& [label, n] : groups) {
    const int n_sft = static_cast<int>(std::lround(n * spec.sft_fraction));
    const int n_test = static_cast<int>(std::lround(n * spec.test_fraction));
    const bool abnormal = !Taxonomy::is_normal(label);
    for (int k = 0; k < n; ++k) {
      SyntheticVideo v;
      char id[32];
      std::snprintf(id, sizeof id, "v%04d", ++serial);
      v.id = id;
      v.split = k < n_sft ? dataset::Split::Sft : (k >= n - n_test ? dataset::Split::Test : dataset::Split::Rl);
      const int frames = spec.frames_per_video;
      if (abnormal) {
        const int len = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
        const int start = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(kIntervalBuckets - len)));
        v.anomaly = PlantedAnomaly{label, TemporalInterval(start * kIntervalGrid, (start + len) * kIntervalGrid)};
        v.risk = taxonomy.risk_of(label);
      }
      for (int i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / (frames - 1);
        if (v.anomaly && v.anomaly->interval.contains(t)) {
          v.frames.push_back(anomaly_symbol(label));
        } else {
          v.frames.push_back(normal_symbol(static_cast<int>(uniform_index(rng, kNormalSymbols))));
        }
      }
      dataset::VideoMeta meta{v.id, label, v.anomaly ? std::optional(v.anomaly->interval) : std::nullopt,
                              taxonomy.risk_of(label), v.split};
      for (auto& r : dataset::instantiate_questions(meta, lib, taxonomy, rng)) corpus.records.push_back(std::move(r));
      corpus.videos.push_back(std::move(v));
    }
  }
  return corpus;
}

std::map<std::string, std::vector<std::string>> load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("Io", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    return j.get<std::map<std::string, std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("Schema", "video sidecar " + path.string() + ": " + e.what());
  }
}

FeatureVector observe(const VideoTimeline& timeline, int budget) {
  if (budget < 1) throw PreconditionError("observation budget must be >= 1");
  const auto& frames = timeline.frames();
  const std::size_t n = frames.size();
  std::vector<std::size_t> idx;
  if (n <= static_cast<std::size_t>(budget)) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  } else if (budget == 1) {
    idx.push_back(0);
  } else {
    for (int k = 0; k < budget; ++k) {
      idx.push_back(static_cast<std::size_t>(
          std::lround(static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(budget - 1))));
    }
  }
  FeatureVector fv;
  for (auto i : idx) {
    ++fv.counts[frames[i].token];
    fv.samples.push_back(frames[i]);
  }
  fv.n_sampled = static_cast<int>(idx.size());
  return fv;
}

PolicyInput make_input(const FeatureVector& features, const dataset::QuestionRecord& q) {
  return PolicyInput{features, q.kind, q.choices};
}

// ---------------------------------------------------------------------------
// ToyPolicy

ToyPolicy::ToyPolicy(const Taxonomy& taxonomy, const dataset::TemplateLibrary& lib, std::vector<double> theta)
    : LogLinearPolicy(std::move(theta)), taxonomy_(&taxonomy), lib_(&lib) {
  const Layout lay(taxonomy);
  if (theta_.empty()) theta_.assign(lay.total, 0.0);
  if (theta_.size() != lay.total) throw PreconditionError("toy policy parameter count mismatch");
  for (auto k : {StageKind::Perception, StageKind::Cognition, StageKind::Action}) {
    if (lib.stage_texts(k).size() != 3) throw PreconditionError("toy policy needs 3 stage texts per stage");
  }
}

std::size_t ToyPolicy::parameter_count(const Taxonomy& taxonomy) { return Layout(taxonomy).total; }

PolicyPtr ToyPolicy::with_parameters(std::vector<double> theta) const {
  return std::make_shared<ToyPolicy>(*taxonomy_, *lib_, std::move(theta));
}

std::optional<Factor> ToyPolicy::next_factor(const PolicyInput& in, std::span<const int> prefix) const {
  const Layout lay(*taxonomy_);
  const Slot slot = slot_at(prefix, prefix.size());
  const StageKind dim = dimension_of(in.kind);
  const auto dim_index = static_cast<std::size_t>(depth_of(dim) - 1);
  Factor f;
  auto simple = [&](std::size_t base, std::size_t n) {
    f.options.resize(n);
    for (std::size_t o = 0; o < n; ++o) f.options[o] = {{base + o, 1.0}};
  };
  auto category_block = [&](const Evidence& ev, bool open_answer) {
    const std::size_t base = open_answer ? lay.subject : lay.category;
    f.options.resize(lay.cats);
    for (std::size_t c = 0; c < lay.cats; ++c) {
      auto& opt = f.options[c];
      if (c > 0 && std::binary_search(ev.present.begin(), ev.present.end(), c)) {
        opt.emplace_back(base + Layout::kAgree, 1.0);
      }
      if (c == 0 && ev.present.empty()) opt.emplace_back(base + Layout::kNone, 1.0);
      opt.emplace_back(base + Layout::kBias + c, 1.0);
    }
  };

  switch (slot) {
    case Slot::Done: return std::nullopt;
    case Slot::Depth: simple(lay.depth + static_cast<std::size_t>(in.kind) * 3, 3); break;
    case Slot::PText: simple(lay.ptext, 3); break;
    case Slot::CText: simple(lay.ctext, 3); break;
    case Slot::AText: simple(lay.atext, 3); break;
    case Slot::Category: category_block(evidence_of(in.features, *taxonomy_), false); break;
    case Slot::Start:
    case Slot::End: {
      const auto ev = evidence_of(in.features, *taxonomy_);
      const bool is_start = slot == Slot::Start;
      const std::size_t base = is_start ? lay.start : lay.end;
      const auto anchor = is_start ? ev.first : ev.last;
      f.options.resize(kIntervalBuckets);
      for (int k = 0; k < kIntervalBuckets; ++k) {
        auto& opt = f.options[static_cast<std::size_t>(k)];
        if (anchor) {
          opt.emplace_back(base + static_cast<std::size_t>(offset_bin(k, *anchor) + 4), 1.0);
        } else {
          opt.emplace_back(base + kOffsetBins, 1.0);
        }
        opt.emplace_back(base + kOffsetBins + 1 + static_cast<std::size_t>(k), 1.0);
      }
      if (!is_start) {
        const int s = prefix.back();
        f.allowed.assign(kIntervalBuckets, 0);
        for (int k = s; k < kIntervalBuckets; ++k) f.allowed[static_cast<std::size_t>(k)] = 1;
      }
      break;
    }
    case Slot::Risk: {
      const auto cat = static_cast<std::size_t>(prefix[position_of(prefix, Slot::Category)]);
      const auto mapped = static_cast<std::size_t>(taxonomy_->risk_of(taxonomy_->label_of(cat)));
      simple(lay.risk + 1, 3);
      f.options[mapped].emplace_back(lay.risk, 1.0);
      break;
    }
    case Slot::Answer: {
      const auto cat_pos = position_of(prefix, Slot::Category);
      const bool has_cat = cat_pos < prefix.size();
      const auto ev = evidence_of(in.features, *taxonomy_);
      if (is_mcq(in.kind)) {
        if (in.choices.empty() || in.choices.size() > 4) throw PreconditionError("MCQ input needs 1-4 choices");
        const std::size_t ref = has_cat ? static_cast<std::size_t>(prefix[cat_pos]) : ev.dominant;
        const auto& ref_label = taxonomy_->label_of(ref);
        f.options.resize(in.choices.size());
        for (std::size_t i = 0; i < in.choices.size(); ++i) {
          auto& opt = f.options[i];
          opt.emplace_back(lay.pos + i, 1.0);
          if (lib_->category_of_choice(dim, in.choices[i].text, *taxonomy_) == ref_label) {
            opt.emplace_back(lay.match + dim_index, 1.0);
          }
        }
      } else {
        category_block(ev, true);
        if (has_cat) {
          f.options[static_cast<std::size_t>(prefix[cat_pos])].emplace_back(lay.copy + dim_index, 1.0);
        }
      }
      break;
    }
  }
  return f;
}

grammar::StructuredResponse ToyPolicy::to_response(const PolicyInput& in, std::span<const int> tokens) const {
  // Validates the sequence against the factor structure.
  (void)log_prob(in, tokens);
  grammar::StructuredResponse r;
  const int depth = tokens[0] + 1;
  std::size_t i = 1;
  r.stages.push_back({StageKind::Perception, lib_->stage_texts(StageKind::Perception)[tokens[i++]]});
  if (depth >= 2) {
    const auto cat = static_cast<std::size_t>(tokens[i++]);
    r.stages.push_back({StageKind::Cognition, lib_->stage_texts(StageKind::Cognition)[tokens[i++]]});
    grammar::AnomalyJudgment j{taxonomy_->label_of(cat), std::nullopt};
    if (cat != 0) {
      const int s = tokens[i++];
      const int e = tokens[i++];
      j.interval = TemporalInterval(s * kIntervalGrid, e * kIntervalGrid);
    }
    r.judgment = j;
  }
  if (depth == 3) {
    r.risk = static_cast<RiskLevel>(tokens[i++]);
    r.stages.push_back({StageKind::Action, lib_->stage_texts(StageKind::Action)[tokens[i++]]});
  }
  const int ans = tokens[i];
  if (is_mcq(in.kind)) {
    r.answer = std::string(1, in.choices[static_cast<std::size_t>(ans)].letter);
  } else {
    r.answer = lib_->answer_text(dimension_of(in.kind), taxonomy_->label_of(static_cast<std::size_t>(ans)));
  }
  return r;
}

std::string ToyPolicy::decode(const PolicyInput& in, std::span<const int> tokens) const {
  return grammar::render_response(to_response(in, tokens));
}

std::vector<int> ToyPolicy::encode(const PolicyInput& in, const grammar::StructuredResponse& resp) const {
  const auto fail = inexpressible;
  auto text_index = [&](StageKind k, const std::string& text) {
    const auto& bank = lib_->stage_texts(k);
    auto it = std::find(bank.begin(), bank.end(), text);
    if (it == bank.end()) fail("stage text outside the bank");
    return static_cast<int>(it - bank.begin());
  };
  auto bucket = [&](double v) {
    const long b = std::lround(v / kIntervalGrid);
    if (std::abs(b * kIntervalGrid - v) > 1e-9) fail("interval off the 0.05 grid");
    return static_cast<int>(b);
  };

  const int depth = grammar::reasoning_depth(resp);
  if (depth < 1 || static_cast<int>(resp.stages.size()) != depth) fail("stages must be a prefix of P, C, A");
  std::vector<int> t{depth - 1};
  t.push_back(text_index(StageKind::Perception, resp.stages[0].text));
  if (depth >= 2) {
    if (!resp.judgment) fail("cognition stage without a judgment");
    const auto cat = taxonomy_->category_id(resp.judgment->category);
    if (!cat) fail("unknown category");
    t.push_back(static_cast<int>(*cat));
    t.push_back(text_index(StageKind::Cognition, resp.stages[1].text));
    if (*cat != 0) {
      t.push_back(bucket(resp.judgment->interval->start()));
      t.push_back(bucket(resp.judgment->interval->end()));
    }
  }
  if (depth == 3) {
    if (!resp.risk) fail("action stage without risk");
    t.push_back(static_cast<int>(*resp.risk));
    t.push_back(text_index(StageKind::Action, resp.stages[2].text));
  }
  if (is_mcq(in.kind)) {
    auto it = std::find_if(in.choices.begin(), in.choices.end(),
                           [&](const dataset::Choice& c) { return resp.answer == std::string(1, c.letter); });
    if (it == in.choices.end()) fail("answer is not a bare option letter");
    t.push_back(static_cast<int>(it - in.choices.begin()));
  } else {
    const auto dim = dimension_of(in.kind);
    int found = -1;
    for (std::size_t c = 0; c < taxonomy_->category_count(); ++c) {
      if (lib_->answer_text(dim, taxonomy_->label_of(c)) == resp.answer) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) fail("open answer is not a templated answer");
    t.push_back(found);
  }
  (void)log_prob(in, t);  // throws if the sequence breaks the factor structure
  return t;
}

std::vector<double> ToyPolicy::evidence_following(const Taxonomy& taxonomy, const dataset::TemplateLibrary&,
                                                  double s) {
  const Layout lay(taxonomy);
  std::vector<double> th(lay.total, 0.0);
  for (auto kind : kAllQuestionKinds) {
    th[lay.depth + static_cast<std::size_t>(kind) * 3 + static_cast<std::size_t>(grammar::expected_depth(kind) - 1)] = s;
  }
  for (std::size_t base : {lay.category, lay.subject}) {
    th[base + Layout::kAgree] = s;
    th[base + Layout::kNone] = s;
  }
  // Offset preferences: pad two grid steps outside the observed anomaly frames.
  const double start_w[kOffsetBins] = {0.5, 0.75, 1.0, 0.5, 0.0, -0.5, -0.5, -0.5, -0.5};
  for (int b = 0; b < kOffsetBins; ++b) {
    th[lay.start + static_cast<std::size_t>(b)] = s * start_w[b];
    th[lay.end + static_cast<std::size_t>(b)] = s * start_w[kOffsetBins - 1 - b];
  }
  th[lay.risk] = s;
  for (std::size_t d = 0; d < 3; ++d) {
    th[lay.match + d] = s;
    th[lay.copy + d] = s;
  }
  return th;
}

StructuredSample sample_structured(const ToyPolicy& policy, const FeatureVector& features,
                                   const dataset::QuestionRecord& q, Rng& rng, bool greedy) {
  const auto in = make_input(features, q);
  auto e = policy.sample(in, rng, greedy);
  StructuredSample out;
  out.text = policy.decode(in, e.tokens);
  out.tokens = std::move(e.tokens);
  out.logps = std::move(e.logps);
  return out;
}

std::string InProcessOracle::query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                                   bool greedy) {
  const auto in = make_input(observe(timeline, budget_), question);
  const auto e = policy_->sample(in, rng_, greedy);
  return policy_->decode(in, e.tokens);
}

SimEnv::SimEnv(const Taxonomy& taxonomy, std::map<std::string, VideoTimeline> timelines, int budget)
    : taxonomy_(&taxonomy), timelines_(std::move(timelines)), budget_(budget) {
  for (const auto& [id, tl] : timelines_) features_.emplace(id, observe(tl, budget_));
}

SimEnv SimEnv::from_corpus(const Taxonomy& taxonomy, const Corpus& corpus, int budget) {
  std::map<std::string, VideoTimeline> tl;
  for (const auto& v : corpus.videos) tl.emplace(v.id, v.timeline());
  return SimEnv(taxonomy, std::move(tl), budget);
}

PolicyInput SimEnv::input_for(const dataset::QuestionRecord& q) const {
  auto it = features_.find(q.video_id);
  if (it == features_.end()) throw PreconditionError("no frames for video " + q.video_id);
  return make_input(it->second, q);
}

const VideoTimeline& SimEnv::timeline_for(const dataset::QuestionRecord& q) const {
  auto it = timelines_.find(q.video_id);
  if (it == timelines_.end()) throw PreconditionError("no frames for video " + q.video_id);
  return it->second;
}

std::unique_ptr<oracle::PolicyOracle> SimEnv::make_oracle(PolicyPtr snapshot) const {
  return std::make_unique<InProcessOracle>(std::move(snapshot), budget_);
}

std::vector<grpo::SftBatch> make_sft_batches(const std::vector<dataset::QuestionRecord>& records,
                                             const grpo::RolloutEnv& env, const ToyPolicy& policy) {
  std::vector<grpo::SftBatch> out;
  for (const auto& r : records) {
    if (!r.cot) continue;
    const auto parsed = grammar::parse_response(*r.cot, env.taxonomy());
    if (!parsed.ok()) throw PreconditionError("record " + r.id + " has an unparseable cot");
    auto in = env.input_for(r);
    auto targets = policy.encode(in, parsed.response());
    out.push_back({std::move(in), std::move(targets)});
  }
  return out;
}

std::vector<dataset::QuestionRecord> filter_split(const std::vector<dataset::QuestionRecord>& records,
                                                  dataset::Split split) {
  std::vector<dataset::QuestionRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const dataset::QuestionRecord& r) { return r.split == split; });
  return out;
}

std::vector<std::string> greedy_responses(const Policy& policy, const std::vector<dataset::QuestionRecord>& records,
                                          const grpo::RolloutEnv& env) {
  std::vector<std::string> out;
  Rng unused(0);
  for (const auto& r : records) {
    const auto in = env.input_for(r);
    out.push_back(policy.decode(in, policy.sample(in, unused, /*greedy=*/true).tokens));
  }
  return out;
}

grpo::GrpoConfig desk_sft_config() {
  grpo::GrpoConfig c;
  c.steps = 300;
  c.learning_rate = 0.03;
  c.batch_size = 8;
  return c;
}

grpo::GrpoConfig desk_rl_config() {
  grpo::GrpoConfig c;
  c.steps = 500;
  c.learning_rate = 1.0;
  c.batch_size = 4;
  return c;
}

nlohmann::json policy_to_json(const ToyPolicy& policy) {
  return {{"type", "toy"}, {"parameters", policy.parameters()}};
}

std::shared_ptr<const ToyPolicy> policy_from_json(const nlohmann::json& doc, const Taxonomy& taxonomy,
                                                  const dataset::TemplateLibrary& lib) {
  try {
    if (doc.at("type").get<std::string>() != "toy") throw PreconditionError("policy type must be \"toy\"");
    return std::make_shared<ToyPolicy>(taxonomy, lib, doc.at("parameters").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("policy document: ") + e.what());
  }
}

}  // namespace vadr::sim
