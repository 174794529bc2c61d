#pragma once

#include <map>
#include <string>

#include "scdt/config.hpp"
#include "scdt/rulebank.hpp"
#include "scdt/sa_index.hpp"

namespace scdt {

// Numeric level summary plus the categorical attributes of one mode, in
// original sensor units.
struct AttributeSummary {
  double mean = 0.0;  // median window mean of the mode
  double lo = 0.0;    // admissible floor: envelope lower bound of the window minimum
  double hi = 0.0;    // admissible ceiling: envelope upper bound of the window maximum
  double amp = 0.0;   // median robust amplitude
  Trend trend = Trend::kMaintain;
  Variability variability = Variability::kMiddle;
  Shape shape = Shape::kMiddle;
};

// Always satisfies lo <= mean <= hi. Throws UsageError when the sensor's
// training range is degenerate (zero span).
AttributeSummary summarize_attributes(const ModeRule& mode, const SensorRange& range, int window,
                                      const EngineConfig& cfg);

// What `sensor` should look like while `actuator` sits in discretized
// `state`.
struct SemanticTarget {
  std::string sensor;
  std::string actuator;
  int state = 0;

  bool operator==(const SemanticTarget&) const = default;
  bool operator<(const SemanticTarget& o) const {
    if (sensor != o.sensor) return sensor < o.sensor;
    if (actuator != o.actuator) return actuator < o.actuator;
    return state < o.state;
  }
  std::string to_string() const;
};

struct SemanticRule {
  SemanticTarget target;
  std::string text;  // 1-2 sentences, always non-empty
  AttributeSummary attributes;
  std::string provider;         // "template" or the external provider's kind
  std::string provider_digest;  // hex digest of the prompt payload;
                                // "rejected:" prefix when the provider reply
                                // failed validation and the template was used
};

using SemanticBank = std::map<SemanticTarget, SemanticRule>;

// Canonical deterministic sentence; the offline stand-in for generated text.
std::string render_template_text(const AttributeSummary& summary, const SemanticTarget& target);

// The exact JSON document sent to external providers (and digested for the
// audit trail): {sensor, actuator, state, attributes, representative_stats,
// instructions}.
std::string build_prompt_payload(const SemanticTarget& target, const AttributeSummary& summary);

// Count of sentence breaks: a run of '.', '!' or '?' followed by whitespace
// or the end of the text. Decimal points inside numbers do not break, and a
// trailing unterminated fragment counts as one sentence.
int sentence_count(const std::string& text);

struct SemanticPrompt {
  SemanticTarget target;
  AttributeSummary attributes;
  std::string payload_json;
};

// Text source the generator fans out to. Implementations may throw
// ProviderError on transport exhaustion; any returned text still goes
// through validation.
class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual const char* kind() const = 0;
  virtual std::string complete(const SemanticPrompt& prompt) = 0;
};

// Offline default: echoes the canonical template sentence.
class TemplateTextProvider final : public TextProvider {
 public:
  const char* kind() const override { return "template"; }
  std::string complete(const SemanticPrompt& prompt) override {
    return render_template_text(prompt.attributes, prompt.target);
  }
};

// One rule per pooled (sensor, actuator, state) entry whose actuator is
// related to the sensor (r >= r_min), described by the entry's dominant
// (highest-support) mode. provider == nullptr means the built-in template.
// External provider calls fan out over a bounded pool; results are merged in
// target order, so output is deterministic for a deterministic provider.
SemanticBank generate_semantic_bank(const RuleBank& bank, const SaIndex& index,
                                    const EngineConfig& cfg, TextProvider* provider = nullptr);

// Fill every mode's semantic_text with its own template description. The
// context actuator is the sensor's strongest related actuator (falling back
// to the first in scope), with the state taken from the mode's own key.
void annotate_bank_semantics(RuleBank& bank, const SaIndex& index, const Manifest& manifest,
                             const EngineConfig& cfg);

}  // namespace scdt
