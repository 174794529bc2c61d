#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "scdt/binning.hpp"
#include "scdt/config.hpp"
#include "scdt/manifest.hpp"
#include "scdt/rulebank.hpp"

namespace scdt {

enum class Trend { kIncrease, kDecrease, kMaintain };
enum class Variability { kCompact, kMiddle, kDispersed };
enum class Shape { kStable, kMiddle, kFluctuating };

const char* to_string(Trend t);
const char* to_string(Variability v);
const char* to_string(Shape s);

// Categorical fingerprint of a mode: coarse level band plus trend,
// variability and shape classes, all derived from the mode's robust medians
// against the sensor's training range.
struct ModeSignature {
  int level_bin = 0;
  Trend trend = Trend::kMaintain;
  Variability variability = Variability::kMiddle;
  Shape shape = Shape::kMiddle;

  auto operator<=>(const ModeSignature&) const = default;
  std::string to_string() const;
};

// Reconstruct a mode's median descriptor value in original sensor units from
// the scaled center (median commutes with the affine robust scaling).
double mode_median(const ModeRule& mode, std::size_t dim);

ModeSignature mode_signature(const ModeRule& mode, const SensorRange& range, int window,
                             const EngineConfig& cfg);

// The same categorization applied to a single observed descriptor, used when
// comparing a live window against semantic expectations.
ModeSignature window_signature(const Descriptor& y, const SensorRange& range, int window,
                               const EngineConfig& cfg);

// Coarse level band of a value within the sensor's training range, clamped
// to [0, bins); degenerate ranges collapse to band 0.
int level_bin(double value, const SensorRange& range, int bins);

struct ModeRef {
  int key_index = 0;
  int mode_id = 0;
  auto operator<=>(const ModeRef&) const = default;
};

// All modes observable under (sensor, actuator, state), regardless of what
// the other actuators in the key were doing.
struct SaEntry {
  std::string sensor;
  std::string actuator;
  int state = 0;
  std::vector<ModeRef> modes;
};

struct ActuatorRelatedness {
  std::string sensor;
  std::string actuator;
  double r = 0.0;
};

struct SaIndex {
  std::vector<ActuatorBinning> binnings;         // sorted by actuator id
  std::vector<SaEntry> entries;                  // sorted by (sensor, actuator, state)
  std::vector<ActuatorRelatedness> relatedness;  // sorted by (sensor, actuator)

  const ActuatorBinning* binning(const std::string& actuator) const;
  const SaEntry* entry(const std::string& sensor, const std::string& actuator, int state) const;
  double r_of(const std::string& sensor, const std::string& actuator) const;
};

// Pool every bank mode into its (sensor, actuator, state) entries and fill
// the relatedness table.
SaIndex build_sa_index(const RuleBank& bank, std::vector<ActuatorBinning> binnings,
                       const Manifest& manifest, const EngineConfig& cfg);

// Jensen-Shannon divergence (base 2, in [0,1]) between two distributions
// keyed by signature. Inputs must each sum to 1 within 1e-9 (UsageError).
double js_divergence(const std::map<std::string, double>& p,
                     const std::map<std::string, double>& q);

// Support-weighted signature distribution of one pooled entry.
std::map<std::string, double> entry_signature_distribution(const RuleBank& bank,
                                                           const SaEntry& entry,
                                                           const EngineConfig& cfg);

// Mean (or max) JS divergence across unordered pairs of the actuator's
// non-empty state distributions; single populated state -> 0.
double actuator_relatedness(const RuleBank& bank, const std::vector<const SaEntry*>& states,
                            const EngineConfig& cfg);

// Relatedness table lookup: actuators of `sensor` with r >= r_min, sorted by
// descending r (ties: lexicographic id), truncated to k.
std::vector<ActuatorRelatedness> related_actuators(const SaIndex& index,
                                                   const std::string& sensor, int k,
                                                   double r_min);

}  // namespace scdt
