#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scdt {

// One fixed-length slice of a single sensor channel. `ac_raw` holds the raw
// values of the actuators in this sensor's configured scope, captured at the
// first sample of the window; discretization into states happens later,
// against learned binnings.
struct SensorWindow {
  std::string sensor_id;
  std::int64_t start = 0;  // index of the first sample in the source trace
  std::vector<double> values;
  std::vector<double> ac_raw;
};

inline constexpr int kMinWindowLength = 9;

}  // namespace scdt
