#pragma once

#include <vector>

namespace scdt {

// Window-level confusion counts and derived fractions. Degenerate 0/0
// fractions are defined as 0.
struct RunMetrics {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double false_alarm_rate = 0.0;  // fp / (fp + tn)
};

// Both vectors hold 0/1 flags of equal length (UsageError otherwise).
RunMetrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace scdt
