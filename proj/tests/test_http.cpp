#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stepprune/http_clients.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

using namespace stepprune;
using namespace stepprune::adapters;
using nlohmann::json;

namespace {

/// In-process chat-completions mock bound to an ephemeral port.
class MockServer {
public:
  using Handler = std::function<json(const json& request)>;

  explicit MockServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   calls_.fetch_add(1);
                   if (fail_with_ > 0) {
                     res.status = fail_with_;
                     res.set_content("{\"error\":\"mock failure\"}",
                                     "application/json");
                     return;
                   }
                   json body = json::parse(req.body);
                   last_request_ = body;
                   res.set_content(handler_(body).dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint() const {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port_);
    cfg.model_name = "mock-model";
    cfg.timeout_sec = 5;
    cfg.max_retries = 3;
    cfg.backoff_ms = 1;
    return cfg;
  }

  std::int64_t calls() const { return calls_.load(); }
  void fail_with(int status) { fail_with_ = status; }
  json last_request() const { return last_request_; }

private:
  httplib::Server server_;
  Handler handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::int64_t> calls_{0};
  int fail_with_ = 0;
  json last_request_;
};

ProblemInstance problem() {
  ProblemInstance p;
  p.id = "p1";
  p.statement = "Solve the equation.";
  return p;
}

}  // namespace

TEST_CASE("llm_expand maps usage.completion_tokens into gen_tokens") {
  MockServer mock([](const json&) {
    return json{{"choices",
                 json::array({{{"message", {{"role", "assistant"},
                                            {"content", "First step text."}}},
                               {"finish_reason", "stop"}}})},
                {"usage", {{"completion_tokens", 37}, {"prompt_tokens", 12}}}};
  });
  LlmGenerator gen(mock.endpoint(), "");

  auto batch = gen.expand(problem(), {}, 1, 0.7, 1024);
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].text == "First step text.");
  CHECK(batch[0].gen_tokens == 37);
  CHECK_FALSE(batch[0].score.has_value());

  TokenLedger ledger;
  ledger.add(1, batch[0].gen_tokens);
  CHECK(ledger.generated_total == 37);

  // Request carries model, temperature, max_tokens, n.
  json req = mock.last_request();
  CHECK(req["model"] == "mock-model");
  CHECK(req["n"] == 1);
  CHECK(req["max_tokens"] == 1024);
  CHECK(req["temperature"].get<double>() == doctest::Approx(0.7));
}

TEST_CASE("llm_expand splits aggregate usage across n choices") {
  MockServer mock([](const json&) {
    return json{
        {"choices",
         json::array({{{"message", {{"content", "Step A."}}}},
                      {{"message", {{"content", "Step B."}}}},
                      {{"message", {{"content", "Step C."}}}}})},
        {"usage", {{"completion_tokens", 37}}}};
  });
  LlmGenerator gen(mock.endpoint(), "");
  auto batch = gen.expand(problem(), {}, 3, 0.7, 256);
  REQUIRE(batch.size() == 3);
  CHECK(batch[0].gen_tokens + batch[1].gen_tokens + batch[2].gen_tokens == 37);
  CHECK(batch[0].gen_tokens == 13);  // remainder goes to earlier choices
}

TEST_CASE("llm_expand takes per-choice counts and scores from logprobs") {
  MockServer mock([](const json&) {
    json logprobs = {{"content", json::array({{{"logprob", -0.5}},
                                              {{"logprob", -1.5}}})}};
    return json{{"choices", json::array({{{"message", {{"content", "Two tokens."}}},
                                          {"logprobs", logprobs}}})},
                {"usage", {{"completion_tokens", 99}}}};
  });
  LlmGenerator gen(mock.endpoint(), "");
  auto batch = gen.expand(problem(), {}, 1, 0.7, 256);
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].gen_tokens == 2);  // logprob entries, not the aggregate
  REQUIRE(batch[0].score.has_value());
  CHECK(*batch[0].score == doctest::Approx(-1.0));
}

TEST_CASE("llm_expand marks terminal steps by pattern") {
  MockServer mock([](const json&) {
    return json{{"choices",
                 json::array({{{"message", {{"content", "The final answer is 7."}}}},
                              {{"message", {{"content", "Keep going."}}}}})},
                {"usage", {{"completion_tokens", 10}}}};
  });
  LlmGenerator gen(mock.endpoint(), "final answer");
  auto batch = gen.expand(problem(), {}, 2, 0.7, 256);
  REQUIRE(batch.size() == 2);
  CHECK(batch[0].terminal);
  CHECK_FALSE(batch[1].terminal);
}

TEST_CASE("prm_score parses and clamps") {
  json reply = {{"choices", json::array({{{"message", {{"content", "0.5"}}}}})}};
  MockServer mock([&reply](const json&) { return reply; });
  PrmClient prm(mock.endpoint());

  CHECK(prm.score(problem(), {}) == doctest::Approx(0.5));
  CHECK(prm.clamp_warnings() == 0);

  reply["choices"][0]["message"]["content"] = "1.3";
  CHECK(prm.score(problem(), {}) == doctest::Approx(1.0));
  CHECK(prm.clamp_warnings() == 1);

  reply["choices"][0]["message"]["content"] = "{\"score\": 0.25}";
  CHECK(prm.score(problem(), {}) == doctest::Approx(0.25));
}

TEST_CASE("persistent failure consumes exactly max_retries+1 attempts") {
  MockServer mock([](const json&) { return json{}; });
  mock.fail_with(503);
  PrmClient prm(mock.endpoint());  // max_retries = 3

  CHECK_THROWS_AS(prm.score(problem(), {}), TransportError);
  CHECK(mock.calls() == 4);
}

TEST_CASE("client errors are not retried") {
  MockServer mock([](const json&) { return json{}; });
  mock.fail_with(400);
  PrmClient prm(mock.endpoint());
  CHECK_THROWS_AS(prm.score(problem(), {}), TransportError);
  CHECK(mock.calls() == 1);
}

TEST_CASE("judge parses the dictionary-shaped reply") {
  json reply = {{"choices",
                 json::array({{{"message",
                                {{"content",
                                  "{\"reasoning_step\": \"Different ops.\", "
                                  "\"result\": 0}"}}}}})}};
  MockServer mock([&reply](const json&) { return reply; });
  JudgeClient judge(mock.endpoint());

  auto r = judge.annotate("sentence one.", "sentence two.");
  CHECK(r.result == 0);
  CHECK(r.reasoning_step == "Different ops.");

  reply["choices"][0]["message"]["content"] =
      "Sure! Here is my verdict:\n{\"reasoning_step\": \"Same content.\", "
      "\"result\": 4}\nHope that helps.";
  auto r4 = judge.annotate("a b c.", "a b c!");
  CHECK(r4.result == 4);
}

TEST_CASE("judge retries with a repair instruction then errors") {
  MockServer mock([](const json&) {
    return json{{"choices", json::array({{{"message",
                                           {{"content", "no dictionary here"}}}}})}};
  });
  JudgeClient judge(mock.endpoint());
  CHECK_THROWS_AS(judge.annotate("x.", "y."), FormatError);
  CHECK(mock.calls() == 3);  // initial + 2 repair attempts
}

TEST_CASE("judge rejects out-of-range results") {
  MockServer mock([](const json&) {
    return json{{"choices",
                 json::array({{{"message",
                                {{"content", "{\"reasoning_step\": \"\", "
                                             "\"result\": 7}"}}}}})}};
  });
  JudgeClient judge(mock.endpoint());
  CHECK_THROWS_AS(judge.annotate("x.", "y."), FormatError);
}

TEST_CASE("judge prompt renders byte-identical outside the two slots") {
  const std::string s1 = "We add the terms to get 12.";
  const std::string s2 = "Adding the terms, we get 12.";
  std::string rendered = JudgeClient::render_prompt(s1, s2);

  // Independent splice of the stored template.
  std::string expected = JudgeClient::prompt_template();
  auto splice = [&](const std::string& slot, const std::string& value) {
    std::size_t pos = expected.find(slot);
    REQUIRE(pos != std::string::npos);
    expected = expected.substr(0, pos) + value +
               expected.substr(pos + slot.size());
  };
  splice("{sentence1}", s1);
  splice("{sentence2}", s2);
  CHECK(rendered == expected);

  // The template carries both few-shot exemplars and the output contract.
  const std::string& tpl = JudgeClient::prompt_template();
  CHECK(tpl.find("0: Not equivalent at all") != std::string::npos);
  CHECK(tpl.find("4: Exactly equivalent") != std::string::npos);
  CHECK(tpl.find("reasoning_step") != std::string::npos);
  CHECK(tpl.find("geometric series") != std::string::npos);
  CHECK(tpl.find("amplitude") != std::string::npos);
}

TEST_CASE("remote detector maps probabilities to verdicts") {
  json reply = {{"choices", json::array({{{"message", {{"content", "0.93"}}}}})}};
  MockServer mock([&reply](const json&) { return reply; });
  RemoteDetector detector(mock.endpoint(), 0.5);

  auto v = detector.detect("step a.", "step b.");
  CHECK(v.level == 4);
  CHECK(v.probability == doctest::Approx(0.93));
  CHECK(v.source == equiv::VerdictSource::EXTERNAL);

  reply["choices"][0]["message"]["content"] = "0.12";
  auto v2 = detector.detect("step a.", "step b.");
  CHECK(v2.level == 0);
}

TEST_CASE("remote detector transport failure carries no verdict") {
  MockServer mock([](const json&) { return json{}; });
  mock.fail_with(500);
  auto detector = std::make_shared<RemoteDetector>(mock.endpoint(), 0.5);
  CHECK_THROWS_AS(detector->detect("a.", "b."), TransportError);

  // Wrapped fail-soft, the search-facing behavior degrades instead.
  equiv::FailSoftDetector soft(detector);
  auto v = soft.detect("a.", "b.");
  CHECK_FALSE(v.equivalent());
  CHECK(soft.failures() == 1);
}

TEST_CASE("endpoint config validation") {
  EndpointConfig bad;
  bad.base_url = "not-a-url";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
