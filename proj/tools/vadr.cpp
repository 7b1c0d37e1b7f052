// SPDX-License-Identifier: Apache-2.0
//
// vadr: batch entry points for data validation, synthetic corpora, reward
// scoring, SFT/RL training on the toy policy, and evaluation.
//
// Exit codes: 0 ok, 1 validation failure, 2 oracle unavailable, 3 internal.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vadr/bound_api.hpp"
#include "vadr/dataset.hpp"
#include "vadr/error.hpp"
#include "vadr/grpo.hpp"
#include "vadr/metrics.hpp"
#include "vadr/oracle.hpp"
#include "vadr/rewards.hpp"
#include "vadr/sim.hpp"

#ifndef VADR_VERSION
#define VADR_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace vadr;

namespace {

enum Exit { kOk = 0, kValidation = 1, kOracle = 2, kInternal = 3 };

struct Options {
  std::string data, responses, out = "vadr-out", oracle_url, judge_url, config;
  std::string videos, replay, policy, ref, taxonomy, input, trace, expect;
  std::uint64_t seed = 0;
  int group_size = 0, steps = 0, per_leaf = 4, normal = 52, frames = 61, budget = sim::kDefaultBudget;
  bool parse_only = false;
  std::string split;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("Io", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("Schema", path + ": " + e.what());
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("Io", "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

class Run {
 public:
  Run(std::string subcommand, const Options& o) : sub_(std::move(subcommand)), o_(o) {
    if (!o_.taxonomy.empty()) owned_tax_ = std::make_unique<Taxonomy>(Taxonomy::from_json(read_json(o_.taxonomy)));
    fs::create_directories(o_.out);
    json cfg = o_.config.empty() ? json::object() : read_json(o_.config);
    if (!cfg.is_object()) throw ValidationError("Schema", "config must be a JSON object");
    rewards_ = cfg.contains("rewards") ? rewards::RewardConfig::from_json(cfg["rewards"]) : rewards::RewardConfig{};
    rewards_.validate();
    grpo_doc_ = cfg.value("grpo", json::object());
  }

  const Taxonomy& tax() const { return owned_tax_ ? *owned_tax_ : Taxonomy::builtin(); }
  const dataset::TemplateLibrary& lib() const { return dataset::TemplateLibrary::builtin(); }
  const rewards::RewardConfig& reward_config() const { return rewards_; }

  grpo::GrpoConfig grpo_config(const grpo::GrpoConfig& base) {
    auto c = grpo::GrpoConfig::from_json(grpo_doc_, base);
    if (o_.group_size > 0) c.group_size = o_.group_size;
    if (o_.steps > 0) c.steps = o_.steps;
    c.validate();
    grpo_ = c;
    return c;
  }

  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(o_.out) / name;
  }

  std::vector<dataset::QuestionRecord> records() const {
    if (o_.data.empty()) throw PreconditionError("--data is required");
    auto recs = dataset::load_records(o_.data, tax());
    if (!o_.split.empty()) {
      auto s = dataset::parse_split(o_.split);
      if (!s) throw PreconditionError("unknown split: " + o_.split);
      recs = sim::filter_split(recs, *s);
    }
    return recs;
  }

  std::map<std::string, VideoTimeline> timelines() const {
    if (o_.videos.empty()) throw PreconditionError("--videos is required");
    std::map<std::string, VideoTimeline> out;
    for (auto& [id, frames] : sim::load_sidecar(o_.videos)) out.emplace(id, VideoTimeline::uniform(frames));
    return out;
  }

  std::shared_ptr<const sim::ToyPolicy> load_policy(const std::string& path) const {
    if (path.empty()) return std::make_shared<sim::ToyPolicy>(tax(), lib());
    return sim::policy_from_json(read_json(path), tax(), lib());
  }

  std::shared_ptr<oracle::EndpointClient> client(const std::string& url) const {
    oracle::EndpointConfig cfg;
    cfg.base_url = url;
    cfg.validate();
    return std::make_shared<oracle::EndpointClient>(cfg, oracle::make_http_transport(cfg));
  }

  void write_manifest() {
    ordered_json m;
    m["tool"] = "vadr";
    m["version"] = VADR_VERSION;
    m["json_library"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                        std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    m["subcommand"] = sub_;
    m["seed"] = o_.seed;
    ordered_json opts;
    auto put = [&](const char* k, const std::string& v) {
      if (!v.empty()) opts[k] = v;
    };
    put("data", o_.data);
    put("responses", o_.responses);
    put("videos", o_.videos);
    put("replay", o_.replay);
    put("policy", o_.policy);
    put("ref", o_.ref);
    put("taxonomy", o_.taxonomy);
    put("config", o_.config);
    put("oracle_url", o_.oracle_url);
    put("judge_url", o_.judge_url);
    put("split", o_.split);
    if (o_.parse_only) opts["parse_only"] = true;
    m["options"] = opts;
    m["rewards"] = rewards_.to_json();
    if (grpo_) m["grpo"] = grpo_->to_json();
    m["outputs"] = outputs_;
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["created_utc"] = stamp;
    std::ofstream(fs::path(o_.out) / "manifest.json") << m.dump(2) << "\n";
  }

 private:
  std::string sub_;
  const Options& o_;
  std::unique_ptr<Taxonomy> owned_tax_;
  rewards::RewardConfig rewards_;
  json grpo_doc_;
  std::optional<grpo::GrpoConfig> grpo_;
  std::vector<std::string> outputs_;
};

void validate_data(Run& run, const Options& o) {
  const auto recs = run.records();
  const auto counts = dataset::count_splits(recs);
  if (!o.expect.empty()) dataset::check_manifest(counts, read_json(o.expect));
  ordered_json j;
  j["records"] = recs.size();
  for (auto s : {dataset::Split::Sft, dataset::Split::Rl, dataset::Split::Test}) {
    const auto r = counts.records.count(s) ? counts.records.at(s) : 0;
    const auto v = counts.videos.count(s) ? counts.videos.at(s) : 0;
    j["splits"][std::string(dataset::to_string(s))] = {{"records", r}, {"videos", v}};
  }
  std::ofstream(run.output("validation.json")) << j.dump(2) << "\n";
}

void gen_synth(Run& run, const Options& o) {
  auto spec = sim::CorpusSpec::uniform(run.tax(), o.per_leaf, o.normal, o.seed);
  spec.frames_per_video = o.frames;
  const auto corpus = sim::generate_corpus(spec, run.tax(), run.lib());
  dataset::save_records(run.output("records.jsonl"), corpus.records);
  std::ofstream(run.output("videos.json")) << corpus.sidecar().dump() << "\n";
}

void score(Run& run, const Options& o) {
  if (o.responses.empty()) throw PreconditionError("--responses is required");
  const auto recs = run.records();
  const auto lines = read_lines(o.responses);
  if (lines.size() != recs.size()) {
    throw ValidationError("Alignment", std::to_string(recs.size()) + " records vs " + std::to_string(lines.size()) +
                                           " responses");
  }
  if (o.parse_only) {
    std::ofstream out(run.output("parse.jsonl"));
    for (const auto& l : lines) out << api::bound_parse(l, run.tax()) << "\n";
    return;
  }

  std::unique_ptr<oracle::PolicyOracle> verifier;
  if (!o.replay.empty()) {
    verifier = std::make_unique<oracle::ReplayOracle>(oracle::ReplayOracle::from_json(read_json(o.replay)));
  } else if (!o.oracle_url.empty()) {
    verifier = std::make_unique<oracle::HttpPolicyOracle>(run.client(o.oracle_url));
  }
  std::map<std::string, VideoTimeline> videos;
  if (verifier) videos = run.timelines();

  const auto& cfg = run.reward_config();
  Rng rng(o.seed);
  std::vector<double> totals;
  std::ofstream out(run.output("scores.jsonl"));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    Rng local = fork(rng);
    const auto outcome = grammar::parse_response(lines[i], run.tax());
    double v = 0.0;
    if (verifier && outcome.ok()) {
      const auto it = videos.find(recs[i].video_id);
      if (it == videos.end()) throw ValidationError("UnknownVideo", recs[i].video_id);
      v = rewards::verification_reward(outcome.response(), recs[i], it->second, *verifier, run.tax(), local, cfg);
    }
    const auto b = rewards::score_response(outcome, recs[i], cfg, v);
    totals.push_back(b.total);
    out << b.to_json().dump() << "\n";
  }

  if (o.group_size > 0) {
    if (totals.size() % static_cast<std::size_t>(o.group_size) != 0) {
      throw ValidationError("Alignment", "response count is not a multiple of --group-size");
    }
    std::ofstream adv(run.output("advantages.jsonl"));
    for (std::size_t at = 0; at < totals.size(); at += static_cast<std::size_t>(o.group_size)) {
      const std::vector<double> g(totals.begin() + static_cast<std::ptrdiff_t>(at),
                                  totals.begin() + static_cast<std::ptrdiff_t>(at) + o.group_size);
      adv << json(grpo::compute_advantages(g)).dump() << "\n";
    }
  }
}

void write_training(Run& run, const sim::ToyPolicy& policy, const grpo::TrainingTrace& trace) {
  std::ofstream(run.output("policy.json")) << sim::policy_to_json(policy).dump() << "\n";
  std::ofstream t(run.output("trace.jsonl"));
  trace.write_jsonl(t);
}

void train_sft(Run& run, const Options& o) {
  const auto cfg = run.grpo_config(sim::desk_sft_config());
  auto recs = run.records();
  if (o.split.empty()) recs = sim::filter_split(recs, dataset::Split::Sft);
  const auto env = sim::SimEnv(run.tax(), run.timelines(), o.budget);
  const auto init = run.load_policy(o.policy);
  Rng rng(o.seed);
  auto [policy, trace] = grpo::train_sft(init, sim::make_sft_batches(recs, env, *init), cfg, rng);
  write_training(run, dynamic_cast<const sim::ToyPolicy&>(*policy), trace);
}

void train_rl(Run& run, const Options& o) {
  grpo::RlOptions opts;
  opts.grpo = run.grpo_config(sim::desk_rl_config());
  opts.rewards = run.reward_config();
  auto recs = run.records();
  if (o.split.empty()) recs = sim::filter_split(recs, dataset::Split::Rl);
  const auto env = sim::SimEnv(run.tax(), run.timelines(), o.budget);
  const auto init = run.load_policy(o.policy);
  const auto ref = o.ref.empty() ? init : run.load_policy(o.ref);
  std::unique_ptr<oracle::PolicyOracle> remote;
  if (!o.oracle_url.empty()) {
    remote = std::make_unique<oracle::HttpPolicyOracle>(run.client(o.oracle_url));
    opts.oracle = remote.get();
  }
  Rng rng(o.seed);
  auto [policy, trace] = grpo::train_rl(init, ref, recs, env, opts, rng);
  write_training(run, dynamic_cast<const sim::ToyPolicy&>(*policy), trace);
}

void evaluate(Run& run, const Options& o) {
  auto recs = run.records();
  std::vector<std::string> raws;
  if (!o.responses.empty()) {
    raws = read_lines(o.responses);
    if (raws.size() != recs.size()) throw ValidationError("Alignment", "responses do not align with records");
  } else if (!o.policy.empty()) {
    if (o.split.empty()) recs = sim::filter_split(recs, dataset::Split::Test);
    const auto env = sim::SimEnv(run.tax(), run.timelines(), o.budget);
    raws = sim::greedy_responses(*run.load_policy(o.policy), recs, env);
    std::ofstream r(run.output("responses.txt"));
    for (const auto& s : raws) r << s << "\n";
  } else {
    throw PreconditionError("eval needs --responses or --policy");
  }
  std::vector<eval::EvalRecord> ev;
  for (std::size_t i = 0; i < recs.size(); ++i) ev.push_back(eval::make_eval_record(recs[i], raws[i], run.tax()));
  std::unique_ptr<oracle::HttpJudge> judge;
  if (!o.judge_url.empty()) judge = std::make_unique<oracle::HttpJudge>(run.client(o.judge_url));
  auto report = eval::evaluate(ev, judge.get(), run.tax());
  if (judge) report["judge_warnings"] = judge->warnings();
  std::ofstream(run.output("report.json")) << report.dump(2) << "\n";
}

std::string fmt(const json& v, const char* spec = "%.3f") {
  if (v.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v.get<double>());
  return buf;
}

void report(Run& run, const Options& o) {
  if (o.input.empty() && o.trace.empty()) throw PreconditionError("report needs --in or --trace");
  std::ostringstream s;
  if (!o.input.empty()) {
    const auto r = read_json(o.input);
    const auto& a = r.at("answer");
    s << "records            " << r.at("records").get<std::size_t>() << "\n";
    s << "mcq accuracy       " << fmt(a.at("mcq_accuracy")) << "\n";
    s << "bleu-4             " << fmt(a.at("bleu4")) << "\n";
    s << "rouge-2 f1         " << fmt(a.at("rouge2_f1")) << "\n";
    s << "rouge-L f1         " << fmt(a.at("rougeL_f1")) << "\n";
    s << "meteor (basic)     " << fmt(a.at("meteor_basic")) << "\n";
    for (const auto& [k, v] : r.at("stage").items()) {
      if (v.is_number() || v.is_null()) s << k << std::string(k.size() < 19 ? 19 - k.size() : 1, ' ') << fmt(v) << "\n";
    }
    const auto& jt = r.at("joint");
    s << "RR/RW/WR/WW        " << fmt(jt.at("RR")) << "/" << fmt(jt.at("RW")) << "/" << fmt(jt.at("WR")) << "/"
      << fmt(jt.at("WW")) << "\n";
    s << "RRR / WWW          " << fmt(jt.at("RRR")) << " / " << fmt(jt.at("WWW")) << "\n";
    s << "depth alignment    " << fmt(r.at("depth_alignment")) << "\n";
    s << "format validity    " << fmt(r.at("format_validity")) << "\n";
  }
  if (!o.trace.empty()) {
    std::vector<double> rewards;
    for (const auto& line : read_lines(o.trace)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      if (j.contains("mean_reward") && !j["mean_reward"].is_null()) rewards.push_back(j["mean_reward"].get<double>());
    }
    if (rewards.empty()) throw ValidationError("Schema", "trace has no reward records");
    const std::size_t w = std::min<std::size_t>(50, rewards.size());
    double first = 0, last = 0;
    for (std::size_t i = 0; i < w; ++i) {
      first += rewards[i];
      last += rewards[rewards.size() - w + i];
    }
    s << "trace steps        " << rewards.size() << "\n";
    s << "reward first " << w << (w < 10 ? "      " : "     ") << fmt(first / w) << "\n";
    s << "reward last " << w << (w < 10 ? "       " : "      ") << fmt(last / w) << "\n";
  }
  std::ofstream(run.output("report.txt")) << s.str();
  std::cout << s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured video-anomaly reasoning: data, rewards, training, evaluation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory (also receives manifest.json)");
    c->add_option("--seed", o.seed, "Seed for every random draw");
    c->add_option("--config", o.config, "JSON with \"rewards\" and/or \"grpo\" overrides");
    c->add_option("--taxonomy", o.taxonomy, "Taxonomy JSON (defaults to the built-in one)");
  };
  auto data = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Question records (JSONL)");
    c->add_option("--split", o.split, "Restrict records to one split: sft, rl or test");
  };

  auto* v = app.add_subcommand("validate-data", "Validate a JSONL record file");
  common(v);
  data(v);
  v->add_option("--expect", o.expect, "Manifest JSON with train_videos / test_videos");

  auto* g = app.add_subcommand("gen-synth", "Write a synthetic corpus and its video sidecar");
  common(g);
  g->add_option("--per-leaf", o.per_leaf, "Videos per anomaly leaf");
  g->add_option("--normal", o.normal, "Normal videos");
  g->add_option("--frames", o.frames, "Frames per video");

  auto* s = app.add_subcommand("score", "Score raw responses against records");
  common(s);
  data(s);
  s->add_option("--responses", o.responses, "One raw response per line, aligned with --data");
  s->add_flag("--parse-only", o.parse_only, "Emit parse outcomes only");
  s->add_option("--videos", o.videos, "Video sidecar (needed for verification)");
  s->add_option("--replay", o.replay, "Replay script for the verification oracle");
  s->add_option("--oracle-url", o.oracle_url, "Policy oracle endpoint for verification");
  s->add_option("--group-size", o.group_size, "Also emit advantages for consecutive groups");

  auto* ts = app.add_subcommand("train-sft", "Supervised warm-up of the toy policy");
  common(ts);
  data(ts);
  ts->add_option("--videos", o.videos, "Video sidecar")->required();
  ts->add_option("--policy", o.policy, "Initial policy (defaults to all-zero parameters)");
  ts->add_option("--steps", o.steps, "Optimizer steps");
  ts->add_option("--budget", o.budget, "Frames observed per video");

  auto* tr = app.add_subcommand("train-rl", "Group-relative RL of the toy policy");
  common(tr);
  data(tr);
  tr->add_option("--videos", o.videos, "Video sidecar")->required();
  tr->add_option("--policy", o.policy, "Starting policy");
  tr->add_option("--ref", o.ref, "Reference policy for the KL term (defaults to --policy)");
  tr->add_option("--oracle-url", o.oracle_url, "Remote verifier instead of the in-process snapshot");
  tr->add_option("--group-size", o.group_size, "Completions per group");
  tr->add_option("--steps", o.steps, "Optimizer steps");
  tr->add_option("--budget", o.budget, "Frames observed per video");

  auto* e = app.add_subcommand("eval", "Evaluate responses or a policy");
  common(e);
  data(e);
  e->add_option("--responses", o.responses, "One raw response per line, aligned with --data");
  e->add_option("--policy", o.policy, "Toy policy to decode greedily (test split unless --split)");
  e->add_option("--videos", o.videos, "Video sidecar (with --policy)");
  e->add_option("--judge-url", o.judge_url, "Judge endpoint; rule-based surrogate otherwise");
  e->add_option("--budget", o.budget, "Frames observed per video");

  auto* r = app.add_subcommand("report", "Summarize an eval report and/or a training trace");
  common(r);
  r->add_option("--in", o.input, "report.json from eval");
  r->add_option("--trace", o.trace, "trace.jsonl from train-*");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Run run(sub->get_name(), o);
    if (sub == v) validate_data(run, o);
    else if (sub == g) gen_synth(run, o);
    else if (sub == s) score(run, o);
    else if (sub == ts) train_sft(run, o);
    else if (sub == tr) train_rl(run, o);
    else if (sub == e) evaluate(run, o);
    else report(run, o);
    run.write_manifest();
    return kOk;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const PreconditionError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const OracleUnavailable& err) {
    std::cerr << "error: oracle unavailable: " << err.what() << "\n";
    return kOracle;
  } catch (const OracleMalformed& err) {
    std::cerr << "error: oracle reply malformed: " << err.what() << "\n";
    return kOracle;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kInternal;
  }
}
