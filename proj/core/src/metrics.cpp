#include "scdt/metrics.hpp"

#include "scdt/errors.hpp"

namespace scdt {
namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

}  // namespace

RunMetrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw UsageError("compute_metrics: predicted and truth lengths differ (" +
                     std::to_string(predicted.size()) + " vs " + std::to_string(truth.size()) +
                     ")");
  RunMetrics m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++m.tp;
    else if (p && !t) ++m.fp;
    else if (!p && t) ++m.fn;
    else ++m.tn;
  }
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.false_alarm_rate = ratio(m.fp, m.fp + m.tn);
  return m;
}

}  // namespace scdt
