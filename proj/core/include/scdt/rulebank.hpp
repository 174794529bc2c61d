#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scdt/features.hpp"

namespace scdt {

// Context key: one sensor plus the discretized states of every actuator in
// its configured scope (in manifest scope order).
struct SacKey {
  std::string sensor;
  std::vector<int> states;

  bool operator==(const SacKey& other) const = default;
  bool operator<(const SacKey& other) const {
    if (sensor != other.sensor) return sensor < other.sensor;
    return states < other.states;
  }
  std::string to_string() const;
};

// Per-dimension closed interval [lo, hi] at quantile level [alpha, 1-alpha].
struct QuantileEnvelope {
  double alpha = 0.0;
  std::array<double, kDescriptorDims> lo{};
  std::array<double, kDescriptorDims> hi{};

  bool contains(const Descriptor& y) const {
    for (std::size_t j = 0; j < kDescriptorDims; ++j) {
      if (y[j] < lo[j] || y[j] > hi[j]) return false;
    }
    return true;
  }
};

// Median/IQR column scaling shared by all modes of one context key.
struct RobustScaler {
  std::array<double, kDescriptorDims> med{};
  std::array<double, kDescriptorDims> iqr{};  // floored, always positive

  Descriptor scale(const Descriptor& y) const {
    Descriptor out{};
    for (std::size_t j = 0; j < kDescriptorDims; ++j) out[j] = (y[j] - med[j]) / iqr[j];
    return out;
  }
};

// Clipped robust z-score distance with a calibrated acceptance threshold.
struct RobustDistanceModel {
  std::array<double, kDescriptorDims> mu{};     // mode center, scaled space
  std::array<double, kDescriptorDims> sigma{};  // per-dim IQR spread, floored
  double theta = 0.0;                           // accept when d2 <= theta*(1+rho)
  double z_max = 8.0;
  RobustScaler scaler;

  double distance2(const Descriptor& y) const;
  std::array<double, kDescriptorDims> z_scores(const Descriptor& y) const;
};

struct ModeRule {
  int mode_id = 0;
  int support = 0;
  QuantileEnvelope envelope;
  RobustDistanceModel distance;
  std::string semantic_text;  // filled by the semantics stage; may be empty
};

struct KeyRules {
  SacKey key;
  std::vector<ModeRule> modes;  // ordered by mode_id
};

struct SensorRange {
  double lo = 0.0;
  double hi = 0.0;
  double span() const { return hi - lo; }
};

struct BankMetadata {
  int window = 30;
  int stride = 30;
  double alpha = 0.005;
  double q = 0.999;
  double rho = 0.1;
  double z_max = 8.0;
  int min_windows = 10;
  std::uint64_t seed = 0;
  std::string manifest_digest;
  std::map<std::string, SensorRange> sensor_ranges;
};

// The learned model: context keys in canonical (sensor, states) order, each
// holding its consolidated modes.
struct RuleBank {
  BankMetadata meta;
  std::vector<KeyRules> keys;

  const KeyRules* find(const SacKey& key) const;
  int key_index(const SacKey& key) const;  // -1 when absent
  std::size_t mode_count() const;
};

}  // namespace scdt
