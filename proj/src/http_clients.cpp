#include "stepprune/http_clients.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>

namespace stepprune::adapters {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.empty() || base_url.find("://") == std::string::npos)
    throw ConfigError("EndpointConfig: base_url must be a full URL");
  if (timeout_sec <= 0) throw ConfigError("EndpointConfig: timeout must be > 0");
  if (max_retries < 0) throw ConfigError("EndpointConfig: negative max_retries");
  if (max_concurrency < 1)
    throw ConfigError("EndpointConfig: max_concurrency < 1");
}

// ----------------------------------------------------------------------------
// ChatClient
// ----------------------------------------------------------------------------

struct ChatClient::Impl {
  EndpointConfig config;
  std::counting_semaphore<256> slots;

  explicit Impl(EndpointConfig cfg)
      : config(std::move(cfg)),
        slots(std::min(config.max_concurrency, 256)) {}
};

ChatClient::ChatClient(EndpointConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
}

ChatClient::~ChatClient() = default;

std::string ChatClient::complete_raw(const std::string& body_json) {
  const auto& cfg = impl_->config;
  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<256>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  httplib::Headers headers;
  if (!cfg.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::milliseconds(
          static_cast<long long>(cfg.backoff_ms) << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_sec, 0);
    client.set_read_timeout(cfg.timeout_sec, 0);
    client.set_write_timeout(cfg.timeout_sec, 0);

    auto res = client.Post("/chat/completions", headers, body_json,
                           "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status == 429 || res->status >= 500) continue;  // retriable
    throw TransportError("chat/completions failed (" + last_error +
                         "): " + res->body.substr(0, 200));
  }
  throw TransportError("chat/completions failed after " +
                       std::to_string(cfg.max_retries + 1) +
                       " attempts: " + last_error);
}

namespace {

json parse_response(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed chat response: ") + e.what() +
                      "; body starts with: " + body.substr(0, 120));
  }
}

std::string choice_content(const json& response, std::size_t index) {
  const auto& choices = response.at("choices");
  if (index >= choices.size())
    throw FormatError("chat response missing choice " + std::to_string(index));
  return choices[index].at("message").at("content").get<std::string>();
}

std::string render_path_prompt(const ProblemInstance& problem,
                               const std::vector<CandidateStep>& path) {
  std::ostringstream os;
  os << problem.statement;
  for (const auto& step : path) os << "\n" << step.text;
  return os.str();
}

}  // namespace

// ----------------------------------------------------------------------------
// LlmGenerator
// ----------------------------------------------------------------------------

LlmGenerator::LlmGenerator(EndpointConfig config, std::string terminal_pattern)
    : client_(std::make_shared<ChatClient>(config)),
      config_(std::move(config)),
      terminal_pattern_(std::move(terminal_pattern)) {}

std::vector<CandidateStep> LlmGenerator::expand(
    const ProblemInstance& problem, const std::vector<CandidateStep>& path,
    int n, double temperature, int max_new_tokens) {
  if (n < 1) throw ContractViolation("llm expand: n < 1");

  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array(
      {{{"role", "user"}, {"content", render_path_prompt(problem, path)}}});
  body["temperature"] = temperature;
  body["max_tokens"] = max_new_tokens;
  body["n"] = n;

  json response = parse_response(client_->complete_raw(body.dump()));
  const auto& choices = response.at("choices");
  const std::size_t count = choices.size();
  if (count == 0) return {};

  // Per-choice token counts from logprobs when present; otherwise the
  // reported completion total split evenly, remainder to earlier choices.
  std::vector<std::int64_t> tokens(count, 0);
  bool have_per_choice = true;
  for (std::size_t i = 0; i < count; ++i) {
    if (choices[i].contains("logprobs") && !choices[i]["logprobs"].is_null() &&
        choices[i]["logprobs"].contains("content")) {
      tokens[i] =
          static_cast<std::int64_t>(choices[i]["logprobs"]["content"].size());
    } else {
      have_per_choice = false;
      break;
    }
  }
  if (!have_per_choice) {
    std::int64_t total = 0;
    if (response.contains("usage") &&
        response["usage"].contains("completion_tokens")) {
      total = response["usage"]["completion_tokens"].get<std::int64_t>();
    }
    std::int64_t base = total / static_cast<std::int64_t>(count);
    std::int64_t rem = total % static_cast<std::int64_t>(count);
    for (std::size_t i = 0; i < count; ++i)
      tokens[i] = base + (static_cast<std::int64_t>(i) < rem ? 1 : 0);
  }

  std::vector<CandidateStep> batch;
  for (std::size_t i = 0; i < count; ++i) {
    CandidateStep step;
    step.text = choice_content(response, i);
    if (step.text.empty()) continue;
    step.gen_tokens = tokens[i];
    if (choices[i].contains("logprobs") && !choices[i]["logprobs"].is_null() &&
        choices[i]["logprobs"].contains("content") &&
        !choices[i]["logprobs"]["content"].empty()) {
      double sum = 0.0;
      for (const auto& t : choices[i]["logprobs"]["content"])
        sum += t.at("logprob").get<double>();
      step.score =
          sum / static_cast<double>(choices[i]["logprobs"]["content"].size());
    }
    if (!terminal_pattern_.empty()) {
      std::regex re(terminal_pattern_,
                    std::regex::ECMAScript | std::regex::icase);
      step.terminal = std::regex_search(step.text, re);
    }
    batch.push_back(std::move(step));
  }
  return batch;
}

// ----------------------------------------------------------------------------
// PrmClient
// ----------------------------------------------------------------------------

PrmClient::PrmClient(EndpointConfig config)
    : client_(std::make_shared<ChatClient>(config)), config_(std::move(config)) {}

double PrmClient::score(const ProblemInstance& problem,
                        const std::vector<CandidateStep>& path) {
  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array(
      {{{"role", "user"}, {"content", render_path_prompt(problem, path)}}});
  body["temperature"] = 0.0;
  body["max_tokens"] = 16;

  json response = parse_response(client_->complete_raw(body.dump()));
  std::string content = choice_content(response, 0);

  double value;
  try {
    json parsed = json::parse(content);
    if (parsed.is_number()) value = parsed.get<double>();
    else if (parsed.is_object() && parsed.contains("score"))
      value = parsed["score"].get<double>();
    else
      throw FormatError("prm: response content is not a score: " + content);
  } catch (const json::exception&) {
    try {
      std::size_t pos = 0;
      value = std::stod(content, &pos);
    } catch (const std::exception&) {
      throw FormatError("prm: cannot parse score from: " + content.substr(0, 80));
    }
  }
  if (value < 0.0 || value > 1.0) {
    clamp_warnings_.fetch_add(1);
    value = std::min(1.0, std::max(0.0, value));
  }
  return value;
}

// ----------------------------------------------------------------------------
// JudgeClient
// ----------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxRepairAttempts = 2;

bool parse_judge_content(const std::string& content, JudgeResult& out) {
  std::size_t open = content.find('{');
  std::size_t close = content.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close <= open)
    return false;
  std::string slice = content.substr(open, close - open + 1);
  try {
    json parsed = json::parse(slice);
    if (!parsed.contains("result")) return false;
    if (parsed["result"].is_number_integer()) {
      out.result = parsed["result"].get<int>();
    } else if (parsed["result"].is_string()) {
      out.result = std::stoi(parsed["result"].get<std::string>());
    } else {
      return false;
    }
    out.reasoning_step = parsed.value("reasoning_step", "");
    return true;
  } catch (const std::exception&) {
    // The reply often embeds raw LaTeX; fall back to scanning for the
    // result field.
    std::size_t key = slice.find("\"result\"");
    if (key == std::string::npos) return false;
    std::size_t colon = slice.find(':', key);
    if (colon == std::string::npos) return false;
    std::size_t digit = slice.find_first_of("01234", colon);
    if (digit == std::string::npos) return false;
    out.result = slice[digit] - '0';
    out.reasoning_step = slice;
    return true;
  }
}

}  // namespace

JudgeClient::JudgeClient(EndpointConfig config)
    : client_(std::make_shared<ChatClient>(config)), config_(std::move(config)) {}

JudgeResult JudgeClient::annotate(const std::string& sentence1,
                                  const std::string& sentence2) {
  std::string prompt = render_prompt(sentence1, sentence2);
  for (std::size_t attempt = 0; attempt <= kMaxRepairAttempts; ++attempt) {
    json body;
    body["model"] = config_.model_name;
    json messages = json::array(
        {{{"role", "user"}, {"content", prompt}}});
    if (attempt > 0) {
      messages.push_back(
          {{"role", "user"},
           {"content",
            "Your previous reply could not be parsed. Reply with exactly one "
            "Python dictionary: {\"reasoning_step\": \"...\", \"result\": "
            "<integer 0-4>}"}});
    }
    body["messages"] = messages;
    body["temperature"] = 0.0;
    body["max_tokens"] = 1024;

    json response = parse_response(client_->complete_raw(body.dump()));
    std::string content = choice_content(response, 0);

    JudgeResult result;
    if (parse_judge_content(content, result)) {
      if (result.result < 0 || result.result > 4)
        throw FormatError("judge returned out-of-range result " +
                          std::to_string(result.result));
      return result;
    }
  }
  throw FormatError("judge reply unparseable after " +
                    std::to_string(kMaxRepairAttempts + 1) + " attempts");
}

// ----------------------------------------------------------------------------
// RemoteClassifier / RemoteDetector
// ----------------------------------------------------------------------------

RemoteClassifier::RemoteClassifier(EndpointConfig config)
    : client_(std::make_shared<ChatClient>(config)), config_(std::move(config)) {}

double RemoteClassifier::predict(std::string_view a, std::string_view b) {
  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array(
      {{{"role", "user"},
        {"content", std::string("Sentence1: ") + std::string(a) +
                        "\nSentence2: " + std::string(b)}}});
  body["temperature"] = 0.0;
  body["max_tokens"] = 8;

  json response = parse_response(client_->complete_raw(body.dump()));
  std::string content = choice_content(response, 0);
  try {
    return std::stod(content);
  } catch (const std::exception&) {
    throw FormatError("remote classifier: cannot parse probability from: " +
                      content.substr(0, 80));
  }
}

RemoteDetector::RemoteDetector(EndpointConfig config, double decision_threshold)
    : classifier_(std::move(config)), decision_threshold_(decision_threshold) {}

equiv::Verdict RemoteDetector::detect(std::string_view a,
                                      std::string_view b) const {
  if (a.empty() || b.empty())
    throw ContractViolation("detect: empty text");
  double p = classifier_.predict(a, b);
  if (p >= decision_threshold_)
    return equiv::Verdict{4, p, equiv::VerdictSource::EXTERNAL};
  return equiv::Verdict{0, p, equiv::VerdictSource::EXTERNAL};
}

}  // namespace stepprune::adapters
