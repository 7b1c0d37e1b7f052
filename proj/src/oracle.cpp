// SPDX-License-Identifier: Apache-2.0

#include "vadr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "vadr/error.hpp"
#include "vadr/grammar.hpp"
#include "vadr/rewards.hpp"
#include "vadr/text.hpp"

namespace vadr::oracle {

namespace {

constexpr Rubric kRubrics[] = {
    Rubric::Reasonability,  Rubric::Detail,          Rubric::Consistency,      Rubric::Identification,
    Rubric::Interpretation, Rubric::Appropriateness, Rubric::ReasoningCorrect,
};

}  // namespace

std::string_view to_string(Rubric r) noexcept {
  switch (r) {
    case Rubric::Reasonability: return "reasonability";
    case Rubric::Detail: return "detail";
    case Rubric::Consistency: return "consistency";
    case Rubric::Identification: return "identification";
    case Rubric::Interpretation: return "interpretation";
    case Rubric::Appropriateness: return "appropriateness";
    case Rubric::ReasoningCorrect: return "reasoning_correct";
  }
  return "?";
}

Rubric parse_rubric(std::string_view name) {
  for (Rubric r : kRubrics) {
    if (to_string(r) == name) return r;
  }
  throw PreconditionError("unknown rubric: " + std::string(name));
}

JudgeGold JudgeGold::from(const dataset::QuestionRecord& rec) {
  return JudgeGold{rec.kind,       rec.gold_category, rec.gold_interval,
                   rec.gold_risk,  rec.gold_letter,   rec.reference_answer};
}

nlohmann::json JudgeGold::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(vadr::to_string(kind));
  j["category"] = category;
  j["interval"] = interval ? nlohmann::json::array({interval->start(), interval->end()}) : nlohmann::json();
  j["risk"] = risk ? nlohmann::json(std::string(vadr::to_string(*risk))) : nlohmann::json();
  j["gold_letter"] = gold_letter ? nlohmann::json(std::string(1, *gold_letter)) : nlohmann::json();
  j["reference_answer"] = reference_answer ? nlohmann::json(*reference_answer) : nlohmann::json();
  return j;
}

double RuleJudge::assess(std::string_view response, const JudgeGold& gold, Rubric rubric) {
  const auto outcome = grammar::parse_response(response, taxonomy_);
  const auto* r = outcome.response_if();
  if (r == nullptr) return 0.0;

  const int expected = grammar::expected_depth(gold.kind);
  const bool category_ok = r->judgment && taxonomy_.canonical(gold.category) == r->judgment->category;
  const bool depth_ok = grammar::reasoning_depth(*r) == expected;
  const bool risk_ok = gold.risk && r->risk == gold.risk;

  switch (rubric) {
    case Rubric::ReasoningCorrect:
    case Rubric::Reasonability: {
      // Perception-only questions carry no judgment to check.
      const bool cat = expected < 2 || category_ok;
      return cat && depth_ok && (!gold.risk || risk_ok) ? 1.0 : 0.0;
    }
    case Rubric::Interpretation: return category_ok ? 1.0 : 0.0;
    case Rubric::Identification: {
      if (gold.gold_letter) {
        const auto letter = rewards::extract_option_letter(r->answer);
        return letter == gold.gold_letter ? 1.0 : 0.0;
      }
      if (!gold.reference_answer) return 0.0;
      return rewards::token_f1(r->answer, *gold.reference_answer) >= open_threshold_ ? 1.0 : 0.0;
    }
    case Rubric::Appropriateness: return risk_ok ? 1.0 : 0.0;
    case Rubric::Consistency: return depth_ok ? 1.0 : 0.0;
    case Rubric::Detail: {
      int present = 0;
      for (int d = 1; d <= expected; ++d) present += r->has_stage(static_cast<StageKind>(d)) ? 1 : 0;
      return static_cast<double>(present) / expected;
    }
  }
  return 0.0;
}

ReplayOracle ReplayOracle::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw PreconditionError("replay script must be a JSON array");
  ReplayOracle out;
  for (const auto& e : doc) {
    try {
      out.add(e.at("fingerprint").get<std::string>(), e.at("question").get<std::string>(),
              e.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
      throw PreconditionError(std::string("replay entry: ") + ex.what());
    }
  }
  return out;
}

void ReplayOracle::add(std::string fingerprint, std::string prompt, std::string text) {
  script_[{std::move(fingerprint), std::move(prompt)}] = std::move(text);
}

std::string ReplayOracle::query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                                bool /*greedy*/) {
  ++calls_;
  const std::string prompt = dataset::render_prompt(question);
  auto it = script_.find({timeline.fingerprint(), prompt});
  if (it == script_.end()) it = script_.find({"*", prompt});
  if (it == script_.end()) {
    throw OracleUnavailable("replay script has no entry for " + timeline.fingerprint() + " / " + question.id);
  }
  return it->second;
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw PreconditionError("endpoint base_url is empty");
  if (timeout_ms <= 0) throw PreconditionError("endpoint timeout must be > 0");
  if (max_retries < 0) throw PreconditionError("endpoint retries must be >= 0");
  if (max_concurrency < 1) throw PreconditionError("endpoint concurrency must be >= 1");
}

namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const EndpointConfig& cfg) : base_(cfg.base_url), timeout_ms_(cfg.timeout_ms) {}

  std::string post(const std::string& path, const std::string& body, const Headers& headers) override {
    httplib::Client cli(base_);
    const auto sec = timeout_ms_ / 1000;
    const auto usec = (timeout_ms_ % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = cli.Post(path, h, body, "application/json");
    if (!res) throw TransportError("POST " + path + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
      throw TransportError("POST " + path + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

 private:
  std::string base_;
  int timeout_ms_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const EndpointConfig& cfg) {
  cfg.validate();
  return std::make_shared<HttpTransport>(cfg);
}

EndpointClient::EndpointClient(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  cfg_.validate();
  if (!transport_) throw PreconditionError("endpoint transport is null");
  if (!sleeper_) {
    sleeper_ = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
  }
}

int EndpointClient::backoff_ms(int attempt) noexcept {
  int ms = 200;
  for (int i = 1; i < attempt && ms < 5000; ++i) ms *= 2;
  return std::min(ms, 5000);
}

std::string EndpointClient::post(const std::string& path, const nlohmann::json& body) {
  Transport::Headers headers;
  if (!cfg_.token_env.empty()) {
    if (const char* tok = std::getenv(cfg_.token_env.c_str()); tok != nullptr && *tok != '\0') {
      headers.emplace_back("Authorization", std::string("Bearer ") + tok);
    }
  }
  const std::string payload = body.dump();

  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < cfg_.max_concurrency; });
    ++in_flight_;
  }
  struct Release {
    EndpointClient* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(backoff_ms(attempt));
    try {
      return transport_->post(path, payload, headers);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw OracleUnavailable(cfg_.base_url + path + " failed after " + std::to_string(cfg_.max_retries + 1) +
                          " attempts: " + last_error);
}

nlohmann::json HttpPolicyOracle::request_body(const VideoTimeline& timeline,
                                              const dataset::QuestionRecord& question, bool greedy) {
  nlohmann::json frames = nlohmann::json::array();
  nlohmann::json stamps = nlohmann::json::array();
  for (const auto& f : timeline.frames()) {
    frames.push_back(f.token);
    stamps.push_back(f.timestamp);
  }
  return {{"question", dataset::render_prompt(question)},
          {"frames", std::move(frames)},
          {"timestamps", std::move(stamps)},
          {"greedy", greedy}};
}

std::string HttpPolicyOracle::query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                                    bool greedy) {
  const std::string reply = client_->post("/v1/query", request_body(timeline, question, greedy));
  const auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw OracleMalformed("/v1/query reply lacks a string \"text\" field");
  }
  return j["text"].get<std::string>();
}

double HttpJudge::assess(std::string_view response, const JudgeGold& gold, Rubric rubric) {
  const nlohmann::json body = {
      {"response", std::string(response)}, {"gold", gold.to_json()}, {"rubric", std::string(to_string(rubric))}};
  const std::string reply = client_->post("/v1/judge", body);
  const auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("score")) {
    throw OracleMalformed("/v1/judge reply lacks a \"score\" field");
  }
  double score;
  if (j["score"].is_boolean()) {
    score = j["score"].get<bool>() ? 1.0 : 0.0;
  } else if (j["score"].is_number()) {
    score = j["score"].get<double>();
  } else {
    throw OracleMalformed("/v1/judge score is neither number nor boolean");
  }
  if (!std::isfinite(score)) throw OracleMalformed("/v1/judge score is not finite");
  if (score < 0.0 || score > 1.0) {
    const double clamped = std::clamp(score, 0.0, 1.0);
    std::lock_guard lock(mu_);
    warnings_.push_back("judge score " + text::fixed6(score) + " for rubric " + std::string(to_string(rubric)) +
                        " clamped to " + text::fixed6(clamped));
    score = clamped;
  }
  return score;
}

std::vector<std::string> HttpJudge::warnings() const {
  std::lock_guard lock(mu_);
  return warnings_;
}

}  // namespace vadr::oracle
