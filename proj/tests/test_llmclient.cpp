// HTTP completion client: offline refusal, retry/backoff, audit records and
// the two provider bridges, exercised against a loopback mock server.

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scdt/errors.hpp"
#include "scdt/llm_client.hpp"

using namespace scdt;

namespace {

std::string chat_reply(const std::string& content) {
  nlohmann::json message;
  message["content"] = content;
  nlohmann::json choice;
  choice["message"] = message;
  nlohmann::json reply;
  reply["choices"] = nlohmann::json::array({choice});
  return reply.dump();
}

// Loopback chat-completions stub. Behavior is selected by request path.
class MockServer {
 public:
  MockServer() {
    server_.Post("/ok", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      res.set_content(chat_reply("All good."), "application/json");
    });
    server_.Post("/flaky", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      if (flaky_calls_.fetch_add(1) < 2) {
        res.status = 503;
        return;
      }
      res.set_content(chat_reply("Recovered."), "application/json");
    });
    server_.Post("/always500", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      res.status = 500;
    });
    server_.Post("/reject401", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      res.status = 401;
    });
    server_.Post("/nocontent", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      res.set_content("{\"object\":\"chat.completion\"}", "application/json");
    });
    server_.Post("/arb", [this](const httplib::Request& req, httplib::Response& res) {
      note(req);
      res.set_content(chat_reply(arb_content), "application/json");
    });

    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  int calls() const { return calls_.load(); }

  std::string last_body() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_body_;
  }
  std::string last_auth() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_auth_;
  }

  std::string arb_content;  // served under /arb

 private:
  void note(const httplib::Request& req) {
    calls_.fetch_add(1);
    std::lock_guard<std::mutex> lock(mutex_);
    last_body_ = req.body;
    last_auth_ = req.has_header("Authorization") ? req.get_header_value("Authorization") : "";
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> flaky_calls_{0};
  mutable std::mutex mutex_;
  std::string last_body_;
  std::string last_auth_;
};

ProviderConfig online_config(const std::string& endpoint) {
  ProviderConfig cfg;
  cfg.offline = false;
  cfg.endpoint = endpoint;
  cfg.model = "test-model";
  cfg.timeout_seconds = 5.0;
  cfg.max_retries = 2;
  return cfg;
}

}  // namespace

TEST_CASE("offline mode refuses before anything happens") {
  ProviderConfig cfg;  // offline = true is the default
  cfg.endpoint = "http://127.0.0.1:1/unreachable";
  LlmClient client(cfg);

  CHECK_THROWS_AS(client.complete("sys", "payload"), UsageError);
  CHECK(client.records().empty());  // refused calls leave no audit trail
}

TEST_CASE("configuration problems are usage errors, not transport errors") {
  SUBCASE("endpoint missing") {
    ProviderConfig cfg;
    cfg.offline = false;
    LlmClient client(cfg);
    CHECK_THROWS_AS(client.complete("sys", "payload"), UsageError);
    CHECK(client.records().empty());
  }
  SUBCASE("key variable unset") {
    unsetenv("SCDT_TEST_MISSING_KEY");
    ProviderConfig cfg = online_config("http://127.0.0.1:1/never");
    cfg.api_key_env = "SCDT_TEST_MISSING_KEY";
    LlmClient client(cfg);
    CHECK_THROWS_AS(client.complete("sys", "payload"), UsageError);
    CHECK(client.records().empty());
  }
  SUBCASE("negative retry budget") {
    ProviderConfig cfg;
    cfg.max_retries = -1;
    CHECK_THROWS_AS(LlmClient{cfg}, UsageError);
  }
}

TEST_CASE("a successful call returns the content and records one ok entry") {
  MockServer server;
  setenv("SCDT_TEST_API_KEY", "sekrit", 1);
  ProviderConfig cfg = online_config(server.endpoint("/ok"));
  cfg.api_key_env = "SCDT_TEST_API_KEY";
  LlmClient client(cfg);

  const std::string content = client.complete("system says", "user payload");
  CHECK(content == "All good.");
  CHECK(server.calls() == 1);
  CHECK(server.last_auth() == "Bearer sekrit");

  // The wire body is a two-message chat request with the token cap.
  const nlohmann::json body = nlohmann::json::parse(server.last_body());
  CHECK(body.at("model") == "test-model");
  REQUIRE(body.at("messages").size() == 2);
  CHECK(body.at("messages")[0].at("role") == "system");
  CHECK(body.at("messages")[0].at("content") == "system says");
  CHECK(body.at("messages")[1].at("role") == "user");
  CHECK(body.at("messages")[1].at("content") == "user payload");
  CHECK(body.at("max_tokens") == 450);

  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "ok");
  CHECK(records[0].attempts == 1);
  CHECK(records[0].response_text == "All good.");
  CHECK(records[0].provider == "test-model@" + server.endpoint("/ok"));
  CHECK(records[0].payload_digest.size() == 16);
  CHECK(records[0].elapsed_seconds >= 0.0);
  unsetenv("SCDT_TEST_API_KEY");
}

TEST_CASE("a zero token cap omits max_tokens and no key means no auth header") {
  MockServer server;
  ProviderConfig cfg = online_config(server.endpoint("/ok"));
  cfg.max_output_tokens = 0;
  LlmClient client(cfg);

  client.complete("sys", "payload");
  const nlohmann::json body = nlohmann::json::parse(server.last_body());
  CHECK_FALSE(body.contains("max_tokens"));
  CHECK(server.last_auth().empty());
}

TEST_CASE("transient server errors are retried with backoff until success") {
  MockServer server;
  LlmClient client(online_config(server.endpoint("/flaky")));

  const std::string content = client.complete("sys", "payload");
  CHECK(content == "Recovered.");
  CHECK(server.calls() == 3);  // 503, 503, 200

  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "ok");
  CHECK(records[0].attempts == 3);
  // Two backoff sleeps happened: 0.25 s + 0.5 s.
  CHECK(records[0].elapsed_seconds >= 0.5);
}

TEST_CASE("exhausted retries fail with a transport record") {
  MockServer server;
  ProviderConfig cfg = online_config(server.endpoint("/always500"));
  cfg.max_retries = 1;
  LlmClient client(cfg);

  CHECK_THROWS_AS(client.complete("sys", "payload"), ProviderError);
  CHECK(server.calls() == 2);  // first attempt + one retry

  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "transport_failed");
  CHECK(records[0].attempts == 2);
  CHECK(records[0].response_text.empty());
}

TEST_CASE("client errors are not retried") {
  MockServer server;
  ProviderConfig cfg = online_config(server.endpoint("/reject401"));
  cfg.max_retries = 3;
  LlmClient client(cfg);

  CHECK_THROWS_AS(client.complete("sys", "payload"), ProviderError);
  CHECK(server.calls() == 1);  // a 401 is final

  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "transport_failed");
  CHECK(records[0].attempts == 1);
}

TEST_CASE("replies without usable content are rejected") {
  MockServer server;
  LlmClient client(online_config(server.endpoint("/nocontent")));

  CHECK_THROWS_AS(client.complete("sys", "payload"), ProviderError);
  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "rejected");
  CHECK(records[0].response_text.empty());
}

TEST_CASE("connection failures surface as exhausted retries") {
  // Nothing listens on port 1; connects fail immediately on loopback.
  ProviderConfig cfg = online_config("http://127.0.0.1:1/nope");
  cfg.max_retries = 0;
  cfg.timeout_seconds = 2.0;
  LlmClient client(cfg);

  CHECK_THROWS_AS(client.complete("sys", "payload"), ProviderError);
  const auto records = client.records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].outcome == "transport_failed");
  CHECK(records[0].attempts == 1);
}

TEST_CASE("the semantics bridge passes content through and propagates failures") {
  MockServer server;

  SemanticPrompt prompt;
  prompt.target = {"LIT", "MV", 1};
  prompt.payload_json = "{\"sensor\":\"LIT\"}";

  SUBCASE("success") {
    LlmClient client(online_config(server.endpoint("/ok")));
    LlmSemanticProvider provider(client);
    CHECK(provider.complete(prompt) == "All good.");
    CHECK(std::string(provider.kind()) == "llm");
    // The user message carries the prompt payload verbatim.
    const nlohmann::json body = nlohmann::json::parse(server.last_body());
    CHECK(body.at("messages")[1].at("content") == prompt.payload_json);
  }
  SUBCASE("transport failure aborts generation") {
    ProviderConfig cfg = online_config(server.endpoint("/always500"));
    cfg.max_retries = 0;
    LlmClient client(cfg);
    LlmSemanticProvider provider(client);
    CHECK_THROWS_AS(provider.complete(prompt), ProviderError);
  }
}

TEST_CASE("the arbitration bridge never throws") {
  MockServer server;

  SUBCASE("well-formed verdicts parse") {
    server.arb_content = "{\"decision\":\"normal\",\"narrative\":\"expected transition\"}";
    LlmClient client(online_config(server.endpoint("/arb")));
    LlmArbiterProvider provider(client);
    const auto reply = provider.arbitrate("{\"sensor\":\"LIT\"}");
    REQUIRE(reply.has_value());
    CHECK(reply->decision == Decision::kNormal);
    CHECK(reply->narrative == "expected transition");
  }
  SUBCASE("narrative is optional") {
    server.arb_content = "{\"decision\":\"anomaly\"}";
    LlmClient client(online_config(server.endpoint("/arb")));
    LlmArbiterProvider provider(client);
    const auto reply = provider.arbitrate("{}");
    REQUIRE(reply.has_value());
    CHECK(reply->decision == Decision::kAnomaly);
    CHECK(reply->narrative.empty());
  }
  SUBCASE("non-JSON content is discarded") {
    server.arb_content = "I think it is fine.";
    LlmClient client(online_config(server.endpoint("/arb")));
    LlmArbiterProvider provider(client);
    CHECK_FALSE(provider.arbitrate("{}").has_value());
  }
  SUBCASE("unknown decisions are discarded") {
    server.arb_content = "{\"decision\":\"maybe\"}";
    LlmClient client(online_config(server.endpoint("/arb")));
    LlmArbiterProvider provider(client);
    CHECK_FALSE(provider.arbitrate("{}").has_value());
  }
  SUBCASE("transport failure means no opinion") {
    ProviderConfig cfg = online_config(server.endpoint("/always500"));
    cfg.max_retries = 0;
    LlmClient client(cfg);
    LlmArbiterProvider provider(client);
    CHECK_FALSE(provider.arbitrate("{}").has_value());
  }
  SUBCASE("offline configuration means no opinion") {
    ProviderConfig cfg;  // offline
    LlmClient client(cfg);
    LlmArbiterProvider provider(client);
    CHECK_FALSE(provider.arbitrate("{}").has_value());
    CHECK(client.records().empty());
  }
}
