#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scdt/config.hpp"
#include "scdt/inference.hpp"
#include "scdt/semantics.hpp"

namespace scdt {

// Audit entry: exactly one per completed transport attempt sequence. Refused
// calls (offline mode, missing key) throw before any record is created.
struct CompletionRecord {
  std::string provider;        // "<model>@<endpoint>"
  std::string payload_digest;  // hex digest of the request body
  std::string response_text;   // raw message content ("" unless outcome=ok)
  int attempts = 0;
  double elapsed_seconds = 0.0;
  std::string outcome;         // "ok" | "rejected" | "transport_failed"
};

// Chat-completions HTTP client. Wire shape: POST JSON
//   {"model": "...", "messages": [{"role": "system", ...}, {"role": "user",
//   ...}], "max_tokens": N}   (max_tokens omitted when the cap is 0)
// and the reply's choices[0].message.content is the result. Transient
// failures (timeouts, connect errors, 5xx) are retried with exponential
// backoff; 4xx responses are not. Thread-safe.
class LlmClient {
 public:
  explicit LlmClient(ProviderConfig cfg);

  // Throws UsageError when offline or the configured key variable is unset,
  // ProviderError when retries are exhausted or the reply body is unusable.
  std::string complete(const std::string& system_prompt, const std::string& user_payload);

  std::vector<CompletionRecord> records() const;

 private:
  ProviderConfig cfg_;
  mutable std::mutex mutex_;
  std::vector<CompletionRecord> records_;
};

// Bridges the client into the semantics generator. Transport errors
// propagate (generation aborts with a provider error); invalid text is left
// to the generator's validation.
class LlmSemanticProvider final : public TextProvider {
 public:
  explicit LlmSemanticProvider(LlmClient& client) : client_(client) {}
  const char* kind() const override { return "llm"; }
  std::string complete(const SemanticPrompt& prompt) override;

 private:
  LlmClient& client_;
};

// Bridges the client into arbitration/diagnosis. Never throws: transport
// failures and malformed replies come back as nullopt so the deterministic
// path takes over. Expects the model to answer with JSON
// {"decision": "normal"|"anomaly", "narrative": "..."}.
class LlmArbiterProvider final : public ArbiterProvider {
 public:
  explicit LlmArbiterProvider(LlmClient& client) : client_(client) {}
  const char* kind() const override { return "llm"; }
  std::optional<ArbiterReply> arbitrate(const std::string& evidence_json) override;

 private:
  LlmClient& client_;
};

}  // namespace scdt
