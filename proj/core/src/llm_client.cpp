#include "scdt/llm_client.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scdt/errors.hpp"
#include "scdt/jsonout.hpp"
#include "scdt/rng.hpp"

namespace scdt {
namespace {

constexpr const char* kSemanticSystemPrompt =
    "You describe expected industrial sensor behavior. Answer with one or two "
    "plain sentences and no extra formatting.";

constexpr const char* kArbiterSystemPrompt =
    "You arbitrate ambiguous industrial telemetry windows. Answer with a JSON "
    "object {\"decision\": \"normal\"|\"anomaly\", \"narrative\": \"...\"} and "
    "nothing else.";

struct ParsedEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/'
};

ParsedEndpoint parse_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    throw UsageError("provider endpoint must include a scheme: '" + url + "'");
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool transient_status(int status) { return status >= 500 && status < 600; }

std::string hex_digest(const std::string& body) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  return buf;
}

}  // namespace

LlmClient::LlmClient(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.max_retries < 0) throw UsageError("provider max_retries must be >= 0");
}

std::string LlmClient::complete(const std::string& system_prompt,
                                const std::string& user_payload) {
  if (cfg_.offline)
    throw UsageError(
        "provider calls are disabled in offline mode; use the template providers or set "
        "provider.offline=false");
  if (cfg_.endpoint.empty()) throw UsageError("provider endpoint is not configured");

  std::string api_key;
  if (!cfg_.api_key_env.empty()) {
    const char* env = std::getenv(cfg_.api_key_env.c_str());
    if (env == nullptr || *env == '\0')
      throw UsageError("provider API key environment variable '" + cfg_.api_key_env +
                       "' is not set");
    api_key = env;
  }

  std::string body = "{";
  body += "\"model\":" + json_quote(cfg_.model);
  body += ",\"messages\":[{\"role\":\"system\",\"content\":" + json_quote(system_prompt) + "}";
  body += ",{\"role\":\"user\",\"content\":" + json_quote(user_payload) + "}]";
  if (cfg_.max_output_tokens > 0)
    body += ",\"max_tokens\":" + std::to_string(cfg_.max_output_tokens);
  body += "}";

  const ParsedEndpoint ep = parse_endpoint(cfg_.endpoint);

  CompletionRecord record;
  record.provider = cfg_.model + "@" + cfg_.endpoint;
  record.payload_digest = hex_digest(body);

  auto finish = [&](const std::string& outcome, const std::string& text,
                    double elapsed) -> void {
    record.outcome = outcome;
    record.response_text = text;
    record.elapsed_seconds = elapsed;
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(record);
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  std::string failure;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    record.attempts = attempt + 1;
    if (attempt > 0) {
      const double backoff = 0.25 * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    }

    httplib::Client client(ep.base);
    const auto sec = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usec =
        static_cast<long>((cfg_.timeout_seconds - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const httplib::Result res = client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      failure = "transport error: " + httplib::to_string(res.error());
      continue;  // connection-level failure: retry
    }
    if (transient_status(res->status)) {
      failure = "server error: HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      failure = "request refused: HTTP " + std::to_string(res->status);
      finish("transport_failed", "", elapsed());
      throw ProviderError("provider " + record.provider + ": " + failure);
    }

    const nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    std::string content;
    if (!reply.is_discarded() && reply.contains("choices") && reply["choices"].is_array() &&
        !reply["choices"].empty()) {
      const auto& first = reply["choices"][0];
      if (first.contains("message") && first["message"].contains("content") &&
          first["message"]["content"].is_string())
        content = first["message"]["content"].get<std::string>();
    }
    if (content.empty()) {
      finish("rejected", "", elapsed());
      throw ProviderError("provider " + record.provider +
                          ": response body has no usable message content");
    }
    finish("ok", content, elapsed());
    return content;
  }

  finish("transport_failed", "", elapsed());
  throw ProviderError("provider " + record.provider + ": retries exhausted (" + failure + ")");
}

std::vector<CompletionRecord> LlmClient::records() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return records_;
}

std::string LlmSemanticProvider::complete(const SemanticPrompt& prompt) {
  return client_.complete(kSemanticSystemPrompt, prompt.payload_json);
}

std::optional<ArbiterReply> LlmArbiterProvider::arbitrate(const std::string& evidence_json) {
  std::string text;
  try {
    text = client_.complete(kArbiterSystemPrompt, evidence_json);
  } catch (const std::exception&) {
    return std::nullopt;  // deterministic arbiter takes over
  }
  const nlohmann::json reply = nlohmann::json::parse(text, nullptr, false);
  if (reply.is_discarded() || !reply.contains("decision") || !reply["decision"].is_string())
    return std::nullopt;
  const std::string decision = reply["decision"].get<std::string>();
  ArbiterReply out;
  if (decision == "normal") {
    out.decision = Decision::kNormal;
  } else if (decision == "anomaly") {
    out.decision = Decision::kAnomaly;
  } else {
    return std::nullopt;
  }
  if (reply.contains("narrative") && reply["narrative"].is_string())
    out.narrative = reply["narrative"].get<std::string>();
  return out;
}

}  // namespace scdt
