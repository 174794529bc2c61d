#include "scdt/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "scdt/errors.hpp"

namespace scdt {

namespace {

constexpr double kSpecEps = 1e-12;
constexpr double kMadFloor = 1e-12;
constexpr double kNegJumpFactor = -5.0;

double median_sorted(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

void validate(const SensorWindow& w) {
  if (w.values.size() < static_cast<std::size_t>(kMinWindowLength)) {
    throw UsageError("window too short: " + std::to_string(w.values.size()) +
                     " samples (need >= " + std::to_string(kMinWindowLength) + ")");
  }
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    if (!std::isfinite(w.values[i])) {
      throw DataError("non-finite sample at index " + std::to_string(i) +
                      " of window starting at " + std::to_string(w.start) +
                      " (sensor " + w.sensor_id + ")");
    }
  }
}

// Energy ratio of the non-DC bins of the one-sided DFT of the mean-centered
// window. A direct O(W^2) transform is plenty for the window lengths used
// here, and keeps the arithmetic easy to audit.
double spectral_ratio(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  const std::size_t half = n / 2;  // one-sided spectrum: k = 0..n/2
  double total = 0.0;
  double non_dc = 0.0;
  for (std::size_t k = 0; k <= half; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(t) / static_cast<double>(n);
      const double c = x[t] - mean;
      re += c * std::cos(angle);
      im += c * std::sin(angle);
    }
    const double power = re * re + im * im;
    total += power;
    if (k > 0) non_dc += power;
  }
  return non_dc / (total + kSpecEps);
}

}  // namespace

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw UsageError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw UsageError("quantile level must lie in [0, 1], got " + std::to_string(p));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mad(std::span<const double> values) {
  if (values.empty()) throw UsageError("mad of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double med = median_sorted(sorted);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::fabs(values[i] - med);
  std::sort(dev.begin(), dev.end());
  return median_sorted(dev);
}

double ls_slope(std::span<const double> values) {
  const std::size_t n = values.size();
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  double y_mean = 0.0;
  for (double v : values) y_mean += v;
  y_mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    num += dt * (values[t] - y_mean);
    den += dt * dt;
  }
  return num / den;
}

CoreFeatures extract_core(const SensorWindow& window) {
  validate(window);
  const std::vector<double>& x = window.values;
  const std::size_t n = x.size();

  CoreFeatures f;
  for (double v : x) f.mean += v;
  f.mean /= static_cast<double>(n);

  f.amp = quantile(x, 0.995) - quantile(x, 0.005);

  double ss = 0.0;
  for (double v : x) ss += (v - f.mean) * (v - f.mean);
  f.stddev = std::sqrt(ss / static_cast<double>(n));

  // Residual RMSE against the least-squares line over sample indices.
  const double slope = ls_slope(x);
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  double rss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double fit = f.mean + slope * (static_cast<double>(t) - t_mean);
    rss += (x[t] - fit) * (x[t] - fit);
  }
  f.rmse = std::sqrt(rss / static_cast<double>(n));

  std::vector<double> d1(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) d1[t] = x[t + 1] - x[t];
  double abs1 = 0.0;
  for (double v : d1) abs1 += std::fabs(v);
  f.delta = abs1 / static_cast<double>(n - 1);

  double abs2 = 0.0;
  for (std::size_t t = 0; t + 1 < d1.size(); ++t) abs2 += std::fabs(d1[t + 1] - d1[t]);
  f.delta2 = abs2 / static_cast<double>(n - 2);

  // Steep negative jumps: first differences below -5 * MAD(d1), with the MAD
  // floored so a noise-free window still has a well-defined threshold.
  const double jump_threshold = kNegJumpFactor * std::max(mad(d1), kMadFloor);
  int neg = 0;
  for (double v : d1) {
    if (v < jump_threshold) ++neg;
  }
  f.neg = static_cast<double>(neg);

  f.spec = spectral_ratio(x);
  return f;
}

Descriptor extract_descriptor(const SensorWindow& window) {
  const CoreFeatures core = extract_core(window);
  const std::vector<double>& x = window.values;
  const std::size_t n = x.size();

  Descriptor d{};
  d[kDimMin] = *std::min_element(x.begin(), x.end());
  d[kDimMax] = *std::max_element(x.begin(), x.end());

  // Segment slopes over thirds of the window; the last segment absorbs the
  // leftover samples when W is not divisible by three.
  const std::size_t seg = n / 3;
  const std::span<const double> all(x);
  d[kDimSlope1] = ls_slope(all.subspan(0, seg));
  d[kDimSlope2] = ls_slope(all.subspan(seg, seg));
  d[kDimSlope3] = ls_slope(all.subspan(2 * seg));

  d[kDimMean] = core.mean;
  d[kDimAmp] = core.amp;
  d[kDimStd] = core.stddev;
  d[kDimRmse] = core.rmse;
  d[kDimDelta] = core.delta;
  d[kDimDelta2] = core.delta2;
  d[kDimNeg] = core.neg;
  d[kDimSpec] = core.spec;
  return d;
}

}  // namespace scdt
