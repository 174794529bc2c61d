#pragma once

#include <map>
#include <string>
#include <vector>

namespace scdt {

// Column roles and per-sensor actuator scopes for a telemetry CSV. Loaded
// from a key=value file:
//
//   window = 30
//   stride = 30
//   column.timestamp = timestamp
//   column.LIT = sensor
//   column.MV  = actuator
//   column.label = label
//   scope.LIT = MV, P1, P2
//
// Scope order matters: it fixes the position of each actuator's state inside
// a context key.
struct Manifest {
  int window = 30;
  int stride = 30;
  std::string timestamp_column;                             // optional
  std::string label_column;                                 // optional
  std::vector<std::string> sensors;                         // sorted
  std::vector<std::string> actuators;                       // sorted
  std::map<std::string, std::vector<std::string>> scope;    // sensor -> actuators

  const std::vector<std::string>& scope_of(const std::string& sensor) const;
  bool has_sensor(const std::string& name) const;

  // Order-insensitive digest of the canonical form; persisted in rule banks
  // so a bank cannot be silently applied to a different layout.
  std::string digest() const;
  std::string canonical_text() const;
};

Manifest parse_manifest(const std::map<std::string, std::string>& kv);
Manifest load_manifest(const std::string& path);

}  // namespace scdt
