#pragma once

#include <span>
#include <string>
#include <vector>

#include "scdt/config.hpp"

namespace scdt {

// Maps raw actuator readings to small integer states. Low-cardinality
// actuators (discrete commands) get a dense value map; continuous ones get
// equal-width bins over the training min/max. Values unseen in training
// clamp to the nearest state instead of failing.
struct ActuatorBinning {
  enum class Strategy { kValueMap, kEqualWidth };

  std::string actuator;
  Strategy strategy = Strategy::kValueMap;
  std::vector<double> values;  // sorted distinct training values (value map)
  double lo = 0.0;             // training range (equal width)
  double hi = 0.0;
  int max_state = 0;           // states are 0..max_state

  int discretize(double raw) const;
  int state_count() const { return max_state + 1; }
};

ActuatorBinning fit_binning(const std::string& actuator, std::span<const double> column,
                            const EngineConfig& cfg);

}  // namespace scdt
