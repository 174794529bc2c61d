#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "scdt/window.hpp"

namespace scdt {

// The eight dynamics features computed from one window.
struct CoreFeatures {
  double mean = 0.0;    // arithmetic mean
  double amp = 0.0;     // robust amplitude: Q0.995 - Q0.005
  double stddev = 0.0;  // population standard deviation
  double rmse = 0.0;    // RMSE of the residual against the least-squares line
  double delta = 0.0;   // mean absolute first difference
  double delta2 = 0.0;  // mean absolute second difference
  double neg = 0.0;     // count of steep negative jumps
  double spec = 0.0;    // non-DC spectral energy ratio of the centered window

  std::array<double, 8> as_array() const {
    return {mean, amp, stddev, rmse, delta, delta2, neg, spec};
  }
};

// Fixed 13-dimensional window descriptor. Dimension order is part of the
// serialized model format and must never change.
inline constexpr std::size_t kDescriptorDims = 13;
inline constexpr std::array<const char*, kDescriptorDims> kDescriptorDimNames = {
    "f_min", "f_max", "f_s1",    "f_s2",   "f_s3",    "f_mean", "f_amp",
    "f_std", "f_rmse", "f_delta", "f_delta2", "f_neg",  "f_spec"};

enum DescriptorDim : std::size_t {
  kDimMin = 0,
  kDimMax = 1,
  kDimSlope1 = 2,
  kDimSlope2 = 3,
  kDimSlope3 = 4,
  kDimMean = 5,
  kDimAmp = 6,
  kDimStd = 7,
  kDimRmse = 8,
  kDimDelta = 9,
  kDimDelta2 = 10,
  kDimNeg = 11,
  kDimSpec = 12,
};

using Descriptor = std::array<double, kDescriptorDims>;

// Quantile with linear interpolation at rank h = (n-1)*p over the sorted
// sample. Throws UsageError on empty input or p outside [0, 1].
double quantile(std::span<const double> values, double p);

// Median absolute deviation from the median, without any consistency factor.
// Throws UsageError on empty input.
double mad(std::span<const double> values);

// Both extractors validate the window: length >= kMinWindowLength and all
// samples finite (DataError naming the offending sample index otherwise).
CoreFeatures extract_core(const SensorWindow& window);
Descriptor extract_descriptor(const SensorWindow& window);

// Least-squares slope of y against its sample index 0..n-1.
double ls_slope(std::span<const double> values);

}  // namespace scdt
