#include "scdt/binning.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scdt/errors.hpp"

namespace scdt {

int ActuatorBinning::discretize(double raw) const {
  if (strategy == Strategy::kValueMap) {
    // Nearest training value wins; ties resolve to the lower state.
    int best = 0;
    double best_gap = std::fabs(raw - values[0]);
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double gap = std::fabs(raw - values[i]);
      if (gap < best_gap) {
        best_gap = gap;
        best = static_cast<int>(i);
      }
    }
    return best;
  }
  if (hi <= lo) return 0;  // constant training column
  const double width = (hi - lo) / static_cast<double>(max_state + 1);
  const int bin = static_cast<int>(std::floor((raw - lo) / width));
  return std::clamp(bin, 0, max_state);
}

ActuatorBinning fit_binning(const std::string& actuator, std::span<const double> column,
                            const EngineConfig& cfg) {
  if (column.empty()) throw UsageError("cannot fit binning for '" + actuator + "': no data");
  for (double v : column) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in actuator column '" + actuator + "'");
    }
  }

  ActuatorBinning b;
  b.actuator = actuator;

  std::set<double> distinct(column.begin(), column.end());
  if (static_cast<int>(distinct.size()) <= cfg.value_map_cardinality) {
    b.strategy = ActuatorBinning::Strategy::kValueMap;
    b.values.assign(distinct.begin(), distinct.end());
    b.max_state = static_cast<int>(b.values.size()) - 1;
  } else {
    b.strategy = ActuatorBinning::Strategy::kEqualWidth;
    const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
    b.lo = *lo_it;
    b.hi = *hi_it;
    b.max_state = cfg.max_state;
  }
  return b;
}

}  // namespace scdt
