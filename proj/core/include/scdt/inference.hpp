#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scdt/config.hpp"
#include "scdt/dataset.hpp"
#include "scdt/manifest.hpp"
#include "scdt/rulebank.hpp"
#include "scdt/sa_index.hpp"
#include "scdt/semantics.hpp"
#include "scdt/window.hpp"

namespace scdt {

enum class Decision { kNormal, kAnomaly };
enum class DecisionPath { kEnvelope, kDistance, kArbiter };
enum class RetrievalSource { kExact, kSaFallback, kEmpty };

const char* to_string(Decision d);
const char* to_string(DecisionPath p);
const char* to_string(RetrievalSource s);

// Modes considered for one window, with how they were found.
struct CandidateSet {
  RetrievalSource source = RetrievalSource::kEmpty;
  std::vector<ModeRef> modes;  // sorted by (key_index, mode_id), deduplicated
};

// Exact-key hit wins; otherwise the union of the per-actuator pooled entries
// for the current states; otherwise empty (routed to arbitration).
CandidateSet retrieve_candidates(const RuleBank& bank, const SaIndex& index,
                                 const Manifest& manifest, const std::string& sensor,
                                 const std::vector<double>& ac_raw);

// Dereference candidate mode refs against the bank, preserving order.
std::vector<const ModeRule*> resolve_modes(const RuleBank& bank, const CandidateSet& candidates);

// First mode (candidate order) whose closed 13-dim interval contains y;
// -1 when none.
int envelope_check(const Descriptor& y, const std::vector<const ModeRule*>& modes);

struct DistanceResult {
  bool accept = false;
  int best = -1;             // candidate index of k* (argmax margin)
  double best_margin = 0.0;  // m_{k*} = theta_{k*}(1+rho) - d2_{k*}
  std::vector<double> margins;
  std::vector<double> d2;
};

// Clipped robust distance against every candidate; normal iff any margin is
// >= 0. Ties for k* go to the earliest candidate.
DistanceResult distance_check(const Descriptor& y, const std::vector<const ModeRule*>& modes,
                              double rho);

struct DimViolation {
  int dim = 0;
  double observed = 0.0;
  double lo = 0.0;  // best mode's envelope bounds
  double hi = 0.0;
  double z = 0.0;   // clipped z-score against the best mode
};

struct Verdict {
  std::string sensor;
  std::int64_t start = 0;
  Decision decision = Decision::kNormal;
  DecisionPath path = DecisionPath::kEnvelope;
  RetrievalSource source = RetrievalSource::kEmpty;
  bool has_best = false;
  ModeRef best;                // k* (or the envelope-accepting mode)
  bool has_margin = false;
  double margin = 0.0;         // recorded whenever the distance stage ran
  bool has_score = false;
  double score = 0.0;          // min_k d2_k / (theta_k (1+rho)); 0 on envelope accept
  std::vector<DimViolation> violated;  // filled for anomalies with a best mode
  bool arbitrated = false;
  std::string ambiguity_reason;        // why the window left the deterministic path
};

struct ActuatorStateObs {
  std::string actuator;
  int state = 0;
  double raw = 0.0;
};

struct RelatedExpectation {
  std::string actuator;
  double r = 0.0;
  int state = 0;               // the actuator's current discretized state
  bool has_rule = false;
  std::string text;            // semantic expectation for (sensor, actuator, state)
  Trend expected_trend = Trend::kMaintain;
  int expected_level_bin = 0;
};

// Everything a diagnosis provider may see: no raw history, only values
// derived from the bank, the index, and the current window.
struct EvidenceBundle {
  std::string sensor;
  std::int64_t start = 0;
  std::vector<ActuatorStateObs> states;     // manifest scope order
  Descriptor observed{};
  ModeSignature observed_sig;
  std::vector<RelatedExpectation> related;  // ranked by descending r
  bool has_z = false;
  std::array<double, kDescriptorDims> z_scores{};  // vs best mode, clipped
};

struct SuspectActuator {
  std::string actuator;
  double r = 0.0;
  std::string reason;
};

struct Diagnosis {
  std::string narrative;
  std::vector<SuspectActuator> suspects;  // ranked, strongest first
  Decision final_decision = Decision::kNormal;
  std::string provider;                   // "deterministic", "template", or external kind
  bool provider_rejected = false;         // provider reply discarded or transport failed
};

struct ArbiterReply {
  Decision decision = Decision::kAnomaly;
  std::string narrative;
};

// External decision/narrative source for ambiguous windows and diagnosis
// narratives. Implementations must not throw: transport failures and
// malformed replies surface as nullopt so the deterministic path can take
// over (and be flagged).
class ArbiterProvider {
 public:
  virtual ~ArbiterProvider() = default;
  virtual const char* kind() const = 0;
  virtual std::optional<ArbiterReply> arbitrate(const std::string& evidence_json) = 0;
};

// Canonical JSON form of the evidence bundle, the exact payload sent to
// providers.
std::string build_evidence_json(const EvidenceBundle& evidence, const Verdict& verdict);

struct ScreenOutcome {
  Verdict verdict;           // complete for decisive windows; pending for ambiguous
  EvidenceBundle evidence;
  bool ambiguous = false;
  CandidateSet candidates;
};

// The deterministic screen: descriptor -> retrieval -> envelope -> distance.
// Ambiguous windows come back with `ambiguous = true` and a verdict that
// still needs arbitration.
ScreenOutcome screen_window(const SensorWindow& window, const RuleBank& bank,
                            const SaIndex& index, const Manifest& manifest,
                            const SemanticBank& semantics, const EngineConfig& cfg);

// Resolve an ambiguous window. Default (provider == nullptr): normal iff the
// best pooled candidate's d2/theta is within 1 + rho_arb; no candidates at
// all means anomaly ("no matching context").
Diagnosis arbitrate_fallback(const EvidenceBundle& evidence, const Verdict& verdict,
                             const std::vector<const ModeRule*>& candidates,
                             const EngineConfig& cfg, ArbiterProvider* provider = nullptr);

// Explain a decided verdict. The provider may rewrite the narrative but can
// never change final_decision, which always equals verdict.decision.
Diagnosis diagnose(const Verdict& verdict, const EvidenceBundle& evidence,
                   const EngineConfig& cfg, ArbiterProvider* provider = nullptr);

struct SystemVerdict {
  std::int64_t start = 0;
  Decision decision = Decision::kNormal;
  int sensors = 0;
  int anomalous = 0;
};

// OR policy per window start; an empty group is normal.
std::vector<SystemVerdict> system_decisions(const std::vector<Verdict>& verdicts);

struct VerdictRecord {
  Verdict verdict;
  bool has_diagnosis = false;
  Diagnosis diagnosis;
};

struct DetectionResult {
  std::vector<VerdictRecord> records;  // ordered by (sensor, start)
  std::vector<SystemVerdict> system;   // ordered by start
};

// Convenience orchestrator over a full ingested trace.
class Detector {
 public:
  Detector(const RuleBank& bank, const SaIndex& index, const Manifest& manifest,
           const SemanticBank& semantics, EngineConfig cfg, ArbiterProvider* provider = nullptr);

  ScreenOutcome screen(const SensorWindow& window) const;
  VerdictRecord decide(const SensorWindow& window) const;  // screen + arbitration + diagnosis
  DetectionResult run(const Dataset& data) const;

 private:
  const RuleBank& bank_;
  const SaIndex& index_;
  const Manifest& manifest_;
  const SemanticBank& semantics_;
  EngineConfig cfg_;
  ArbiterProvider* provider_;
};

}  // namespace scdt
