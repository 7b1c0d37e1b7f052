// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vadr/dataset.hpp"
#include "vadr/taxonomy.hpp"
#include "vadr/timeline.hpp"

namespace vadr::oracle {

/// Anything that answers a question about a timeline with raw response text:
/// the in-process toy policy, a replay script, or a remote model.
class PolicyOracle {
 public:
  virtual ~PolicyOracle() = default;
  /// Throws OracleUnavailable / OracleMalformed on transport or schema failure.
  virtual std::string query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                            bool greedy) = 0;
};

enum class Rubric {
  Reasonability,
  Detail,
  Consistency,
  Identification,
  Interpretation,
  Appropriateness,
  ReasoningCorrect,
};

std::string_view to_string(Rubric r) noexcept;
/// Throws PreconditionError on an unknown rubric name.
Rubric parse_rubric(std::string_view name);

/// Gold fields a judge may consult.
struct JudgeGold {
  QuestionKind kind;
  std::string category;
  std::optional<TemporalInterval> interval;
  std::optional<RiskLevel> risk;
  std::optional<char> gold_letter;
  std::optional<std::string> reference_answer;

  static JudgeGold from(const dataset::QuestionRecord& rec);
  nlohmann::json to_json() const;
};

class Judge {
 public:
  virtual ~Judge() = default;
  /// Score in [0, 1]; boolean rubrics answer 0 or 1.
  virtual double assess(std::string_view response, const JudgeGold& gold, Rubric rubric) = 0;
};

/// Deterministic judge for synthetic data.
///   reasoning_correct: category right, depth aligned, risk right when gold has one
///   interpretation: category right
///   identification: final answer right
///   appropriateness: risk right (0 when gold has no risk)
///   consistency: depth aligned
///   detail: fraction of expected stages present
///   reasonability: same as reasoning_correct
class RuleJudge final : public Judge {
 public:
  explicit RuleJudge(const Taxonomy& taxonomy, double open_answer_threshold = 0.5)
      : taxonomy_(taxonomy), open_threshold_(open_answer_threshold) {}
  double assess(std::string_view response, const JudgeGold& gold, Rubric rubric) override;

 private:
  const Taxonomy& taxonomy_;
  double open_threshold_;
};

/// Scripted replies keyed by (timeline fingerprint, prompt text). A "*"
/// fingerprint matches any timeline for that prompt.
class ReplayOracle final : public PolicyOracle {
 public:
  ReplayOracle() = default;
  /// Document: [{"fingerprint": "...", "question": "...", "text": "..."}, ...]
  static ReplayOracle from_json(const nlohmann::json& doc);

  void add(std::string fingerprint, std::string prompt, std::string text);
  std::string query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                    bool greedy) override;

  std::size_t calls() const noexcept { return calls_; }

 private:
  std::map<std::pair<std::string, std::string>, std::string> script_;
  std::size_t calls_ = 0;
};

struct EndpointConfig {
  std::string base_url;
  int timeout_ms = 30000;
  int max_retries = 2;
  int max_concurrency = 4;
  /// Environment variable holding a bearer token; unset or empty means no auth.
  std::string token_env = "VADR_API_TOKEN";

  void validate() const;  // throws PreconditionError
};

/// Raised by a Transport for one failed attempt (connection, timeout, non-2xx).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  using Headers = std::vector<std::pair<std::string, std::string>>;
  virtual ~Transport() = default;
  /// Returns the response body of a successful POST.
  virtual std::string post(const std::string& path, const std::string& body, const Headers& headers) = 0;
};

/// HTTP/1.1 transport over cpp-httplib.
std::shared_ptr<Transport> make_http_transport(const EndpointConfig& cfg);

/// Bounded-concurrency JSON-over-POST client with exponential backoff
/// (200 ms, doubling, capped at 5 s). Safe for concurrent use.
class EndpointClient {
 public:
  using Sleeper = std::function<void(int /*milliseconds*/)>;

  EndpointClient(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  /// Throws OracleUnavailable after max_retries + 1 failed attempts.
  std::string post(const std::string& path, const nlohmann::json& body);

  const EndpointConfig& config() const noexcept { return cfg_; }

  static int backoff_ms(int attempt) noexcept;  // delay before retry `attempt` (1-based)

 private:
  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

/// Remote policy: POST /v1/query {"question","frames","timestamps","greedy"} -> {"text"}.
class HttpPolicyOracle final : public PolicyOracle {
 public:
  explicit HttpPolicyOracle(std::shared_ptr<EndpointClient> client) : client_(std::move(client)) {}
  std::string query(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                    bool greedy) override;

  static nlohmann::json request_body(const VideoTimeline& timeline, const dataset::QuestionRecord& question,
                                     bool greedy);

 private:
  std::shared_ptr<EndpointClient> client_;
};

/// Remote judge: POST /v1/judge {"response","gold","rubric"} -> {"score"}.
/// Scores outside [0, 1] are clamped and recorded in warnings().
class HttpJudge final : public Judge {
 public:
  explicit HttpJudge(std::shared_ptr<EndpointClient> client) : client_(std::move(client)) {}
  double assess(std::string_view response, const JudgeGold& gold, Rubric rubric) override;

  std::vector<std::string> warnings() const;

 private:
  std::shared_ptr<EndpointClient> client_;
  mutable std::mutex mu_;
  std::vector<std::string> warnings_;
};

}  // namespace vadr::oracle
