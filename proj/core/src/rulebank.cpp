#include "scdt/rulebank.hpp"

#include <algorithm>
#include <cmath>

namespace scdt {

std::string SacKey::to_string() const {
  std::string out = sensor + "|";
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(states[i]);
  }
  return out;
}

double RobustDistanceModel::distance2(const Descriptor& y) const {
  const Descriptor scaled = scaler.scale(y);
  double sum = 0.0;
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    const double u = std::clamp((scaled[j] - mu[j]) / sigma[j], -z_max, z_max);
    sum += u * u;
  }
  return sum;
}

std::array<double, kDescriptorDims> RobustDistanceModel::z_scores(const Descriptor& y) const {
  const Descriptor scaled = scaler.scale(y);
  std::array<double, kDescriptorDims> z{};
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    z[j] = std::clamp((scaled[j] - mu[j]) / sigma[j], -z_max, z_max);
  }
  return z;
}

const KeyRules* RuleBank::find(const SacKey& key) const {
  const int idx = key_index(key);
  return idx < 0 ? nullptr : &keys[idx];
}

int RuleBank::key_index(const SacKey& key) const {
  const auto it = std::lower_bound(
      keys.begin(), keys.end(), key,
      [](const KeyRules& entry, const SacKey& k) { return entry.key < k; });
  if (it == keys.end() || !(it->key == key)) return -1;
  return static_cast<int>(it - keys.begin());
}

std::size_t RuleBank::mode_count() const {
  std::size_t total = 0;
  for (const auto& k : keys) total += k.modes.size();
  return total;
}

}  // namespace scdt
