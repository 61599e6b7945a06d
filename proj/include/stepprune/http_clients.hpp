#pragma once

#include "stepprune/core.hpp"
#include "stepprune/equiv.hpp"
#include "stepprune/search.hpp"

#include <atomic>
#include <memory>
#include <string>

/**
 * Clients for externally served models, all speaking a chat-completions
 * style HTTP contract: the step generator, the process reward model, the
 * equivalence judge used for dataset annotation, and a remotely served
 * pair classifier. One retry/backoff/concurrency policy covers all four.
 */

namespace stepprune::adapters {

struct EndpointConfig {
  std::string base_url;     // e.g. http://127.0.0.1:8080
  std::string model_name;
  std::string api_key_env;  // environment variable holding the bearer key
  int timeout_sec = 60;
  int max_retries = 3;      // attempts = max_retries + 1
  int backoff_ms = 250;     // exponential, doubled per retry
  int max_concurrency = 4;

  void validate() const;
};

/// POST {base_url}/chat/completions with bearer auth and bounded retries.
/// Retries cover transport failures, HTTP 5xx and 429; the final failure
/// raises TransportError. Bounded concurrency via an internal semaphore.
class ChatClient {
public:
  explicit ChatClient(EndpointConfig config);
  ~ChatClient();

  /// Sends the request body, returns the parsed JSON response body.
  std::string complete_raw(const std::string& body_json);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ----------------------------------------------------------------------------
// Generator
// ----------------------------------------------------------------------------

class LlmGenerator : public search::GeneratorContract {
public:
  /// terminal_pattern is a case-insensitive regex; a candidate matching it
  /// is marked terminal (the answer step).
  explicit LlmGenerator(EndpointConfig config,
                        std::string terminal_pattern = "final answer");

  /// Requests n sampled completions. gen_tokens comes from the reported
  /// completion-token usage (split across choices when n > 1; per-choice
  /// logprob token counts are used when present). score is the mean token
  /// log-probability when the API returns logprobs, otherwise unset.
  std::vector<CandidateStep> expand(const ProblemInstance& problem,
                                    const std::vector<CandidateStep>& path,
                                    int n, double temperature,
                                    int max_new_tokens) override;

private:
  std::shared_ptr<ChatClient> client_;
  EndpointConfig config_;
  std::string terminal_pattern_;
};

// ----------------------------------------------------------------------------
// Process reward model
// ----------------------------------------------------------------------------

class PrmClient : public search::RewardContract {
public:
  explicit PrmClient(EndpointConfig config);

  /// Posts the step sequence; parses the scalar score from the response
  /// content (bare float or {"score": x}), clamped to [0,1].
  double score(const ProblemInstance& problem,
               const std::vector<CandidateStep>& path) override;

  std::int64_t clamp_warnings() const { return clamp_warnings_.load(); }

private:
  std::shared_ptr<ChatClient> client_;
  EndpointConfig config_;
  std::atomic<std::int64_t> clamp_warnings_{0};
};

// ----------------------------------------------------------------------------
// Judge
// ----------------------------------------------------------------------------

struct JudgeResult {
  std::string reasoning_step;
  int result = 0;  // 0..4
};

class JudgeClient {
public:
  explicit JudgeClient(EndpointConfig config);

  /// Renders the labeling prompt with the two sentences substituted, parses
  /// the dictionary-shaped reply, and retries with a repair instruction on
  /// parse failure (bounded).
  JudgeResult annotate(const std::string& sentence1, const std::string& sentence2);

  /// The stored labeling prompt template; {sentence1} and {sentence2} are
  /// the only substitution slots.
  static const std::string& prompt_template();
  static std::string render_prompt(const std::string& sentence1,
                                   const std::string& sentence2);

private:
  std::shared_ptr<ChatClient> client_;
  EndpointConfig config_;
};

// ----------------------------------------------------------------------------
// Remote classifier
// ----------------------------------------------------------------------------

class RemoteClassifier {
public:
  explicit RemoteClassifier(EndpointConfig config);

  /// Equivalence probability for a text pair from the remote service.
  double predict(std::string_view a, std::string_view b);

private:
  std::shared_ptr<ChatClient> client_;
  EndpointConfig config_;
};

/// Detector backed by the remote classifier. Transport failures propagate
/// as TransportError carrying no verdict; wrap in FailSoftDetector inside a
/// search when degradation is wanted.
class RemoteDetector : public equiv::EquivalenceDetector {
public:
  RemoteDetector(EndpointConfig config, double decision_threshold = 0.5);

  equiv::Verdict detect(std::string_view a, std::string_view b) const override;

private:
  mutable RemoteClassifier classifier_;
  double decision_threshold_;
};

}  // namespace stepprune::adapters
