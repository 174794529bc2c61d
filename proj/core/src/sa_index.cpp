#include "scdt/sa_index.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "scdt/errors.hpp"

namespace scdt {

namespace {

constexpr double kNormTolerance = 1e-9;

}  // namespace

int level_bin(double value, const SensorRange& range, int bins) {
  const double span = range.span();
  if (span <= 0.0) return 0;
  const int bin = static_cast<int>(std::floor((value - range.lo) / (span / bins)));
  return std::clamp(bin, 0, bins - 1);
}

const char* to_string(Trend t) {
  switch (t) {
    case Trend::kIncrease: return "increase";
    case Trend::kDecrease: return "decrease";
    case Trend::kMaintain: return "maintain";
  }
  return "maintain";
}

const char* to_string(Variability v) {
  switch (v) {
    case Variability::kCompact: return "compact";
    case Variability::kMiddle: return "middle";
    case Variability::kDispersed: return "dispersed";
  }
  return "middle";
}

const char* to_string(Shape s) {
  switch (s) {
    case Shape::kStable: return "stable";
    case Shape::kMiddle: return "middle";
    case Shape::kFluctuating: return "fluctuating";
  }
  return "middle";
}

std::string ModeSignature::to_string() const {
  return "L" + std::to_string(level_bin) + "/" + scdt::to_string(trend) + "/" +
         scdt::to_string(variability) + "/" + scdt::to_string(shape);
}

double mode_median(const ModeRule& mode, std::size_t dim) {
  const RobustScaler& s = mode.distance.scaler;
  return s.med[dim] + mode.distance.mu[dim] * s.iqr[dim];
}

ModeSignature window_signature(const Descriptor& y, const SensorRange& range, int window,
                               const EngineConfig& cfg) {
  ModeSignature sig;
  const double span = range.span();

  sig.level_bin = level_bin(y[kDimMean], range, cfg.level_bins);

  const double slope = (y[kDimSlope1] + y[kDimSlope2] + y[kDimSlope3]) / 3.0;
  const double band = span > 0.0
                          ? cfg.trend_band_frac * span / static_cast<double>(window)
                          : 0.0;
  if (slope > band) sig.trend = Trend::kIncrease;
  else if (slope < -band) sig.trend = Trend::kDecrease;
  else sig.trend = Trend::kMaintain;

  if (span > 0.0) {
    const double rel_std = y[kDimStd] / span;
    if (rel_std < cfg.var_compact) sig.variability = Variability::kCompact;
    else if (rel_std > cfg.var_dispersed) sig.variability = Variability::kDispersed;
    else sig.variability = Variability::kMiddle;

    const double rel_delta = y[kDimDelta] * static_cast<double>(window) / span;
    if (rel_delta < cfg.shape_stable) sig.shape = Shape::kStable;
    else if (rel_delta > cfg.shape_fluctuating) sig.shape = Shape::kFluctuating;
    else sig.shape = Shape::kMiddle;
  } else {
    sig.variability = Variability::kCompact;
    sig.shape = Shape::kStable;
  }
  return sig;
}

ModeSignature mode_signature(const ModeRule& mode, const SensorRange& range, int window,
                             const EngineConfig& cfg) {
  // A mode's categories are those of its median descriptor.
  Descriptor med;
  for (std::size_t j = 0; j < kDescriptorDims; ++j) med[j] = mode_median(mode, j);
  return window_signature(med, range, window, cfg);
}

const ActuatorBinning* SaIndex::binning(const std::string& actuator) const {
  for (const auto& b : binnings) {
    if (b.actuator == actuator) return &b;
  }
  return nullptr;
}

const SaEntry* SaIndex::entry(const std::string& sensor, const std::string& actuator,
                              int state) const {
  for (const auto& e : entries) {
    if (e.sensor == sensor && e.actuator == actuator && e.state == state) return &e;
  }
  return nullptr;
}

double SaIndex::r_of(const std::string& sensor, const std::string& actuator) const {
  for (const auto& rel : relatedness) {
    if (rel.sensor == sensor && rel.actuator == actuator) return rel.r;
  }
  return 0.0;
}

double js_divergence(const std::map<std::string, double>& p,
                     const std::map<std::string, double>& q) {
  double sum_p = 0.0, sum_q = 0.0;
  for (const auto& [_, v] : p) {
    if (v < 0.0) throw UsageError("js_divergence: negative probability");
    sum_p += v;
  }
  for (const auto& [_, v] : q) {
    if (v < 0.0) throw UsageError("js_divergence: negative probability");
    sum_q += v;
  }
  if (std::fabs(sum_p - 1.0) > kNormTolerance || std::fabs(sum_q - 1.0) > kNormTolerance) {
    throw UsageError("js_divergence: inputs must be normalized distributions");
  }

  // JS = 0.5*KL(P||M) + 0.5*KL(Q||M), M = (P+Q)/2, log base 2; 0*log0 = 0.
  auto lookup = [](const std::map<std::string, double>& d, const std::string& k) {
    const auto it = d.find(k);
    return it == d.end() ? 0.0 : it->second;
  };
  double js = 0.0;
  std::map<std::string, double> support = p;
  for (const auto& [k, v] : q) support.emplace(k, v);
  for (const auto& [k, _] : support) {
    const double pv = lookup(p, k);
    const double qv = lookup(q, k);
    const double m = 0.5 * (pv + qv);
    if (pv > 0.0) js += 0.5 * pv * std::log2(pv / m);
    if (qv > 0.0) js += 0.5 * qv * std::log2(qv / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

std::map<std::string, double> entry_signature_distribution(const RuleBank& bank,
                                                           const SaEntry& entry,
                                                           const EngineConfig& cfg) {
  std::map<std::string, double> dist;
  double total = 0.0;
  for (const ModeRef& ref : entry.modes) {
    const KeyRules& key = bank.keys[ref.key_index];
    const ModeRule& mode = key.modes[ref.mode_id];
    const SensorRange& range = bank.meta.sensor_ranges.at(entry.sensor);
    const std::string sig = mode_signature(mode, range, bank.meta.window, cfg).to_string();
    dist[sig] += static_cast<double>(mode.support);
    total += static_cast<double>(mode.support);
  }
  if (total > 0.0) {
    for (auto& [_, v] : dist) v /= total;
  }
  return dist;
}

double actuator_relatedness(const RuleBank& bank, const std::vector<const SaEntry*>& states,
                            const EngineConfig& cfg) {
  std::vector<std::map<std::string, double>> dists;
  for (const SaEntry* e : states) {
    if (e == nullptr || e->modes.empty()) continue;
    dists.push_back(entry_signature_distribution(bank, *e, cfg));
  }
  if (dists.size() < 2) return 0.0;

  double acc = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t j = i + 1; j < dists.size(); ++j) {
      const double js = js_divergence(dists[i], dists[j]);
      if (cfg.relatedness_max_agg) acc = std::max(acc, js);
      else acc += js;
      ++pairs;
    }
  }
  return cfg.relatedness_max_agg ? acc : acc / static_cast<double>(pairs);
}

SaIndex build_sa_index(const RuleBank& bank, std::vector<ActuatorBinning> binnings,
                       const Manifest& manifest, const EngineConfig& cfg) {
  SaIndex index;
  std::sort(binnings.begin(), binnings.end(),
            [](const ActuatorBinning& a, const ActuatorBinning& b) {
              return a.actuator < b.actuator;
            });
  index.binnings = std::move(binnings);

  // Every mode lands in exactly one (sensor, actuator, state) entry per
  // scoped actuator of its sensor.
  std::map<std::tuple<std::string, std::string, int>, std::vector<ModeRef>> pooled;
  for (std::size_t ki = 0; ki < bank.keys.size(); ++ki) {
    const KeyRules& key = bank.keys[ki];
    const auto& scope = manifest.scope_of(key.key.sensor);
    for (std::size_t a = 0; a < scope.size(); ++a) {
      const int state = key.key.states.at(a);
      auto& modes = pooled[{key.key.sensor, scope[a], state}];
      for (const ModeRule& m : key.modes) {
        modes.push_back({static_cast<int>(ki), m.mode_id});
      }
    }
  }
  for (auto& [k, modes] : pooled) {
    std::sort(modes.begin(), modes.end());
    SaEntry e;
    e.sensor = std::get<0>(k);
    e.actuator = std::get<1>(k);
    e.state = std::get<2>(k);
    e.modes = std::move(modes);
    index.entries.push_back(std::move(e));
  }

  // Relatedness per (sensor, scoped actuator): compare the distributions of
  // that actuator's states.
  for (const auto& sensor : manifest.sensors) {
    for (const auto& actuator : manifest.scope_of(sensor)) {
      const ActuatorBinning* b = index.binning(actuator);
      if (b == nullptr) continue;
      std::vector<const SaEntry*> states;
      for (int s = 0; s < b->state_count(); ++s) {
        states.push_back(index.entry(sensor, actuator, s));
      }
      index.relatedness.push_back({sensor, actuator, actuator_relatedness(bank, states, cfg)});
    }
  }
  std::sort(index.relatedness.begin(), index.relatedness.end(),
            [](const ActuatorRelatedness& a, const ActuatorRelatedness& b) {
              return std::tie(a.sensor, a.actuator) < std::tie(b.sensor, b.actuator);
            });
  return index;
}

std::vector<ActuatorRelatedness> related_actuators(const SaIndex& index,
                                                   const std::string& sensor, int k,
                                                   double r_min) {
  std::vector<ActuatorRelatedness> out;
  for (const auto& rel : index.relatedness) {
    if (rel.sensor == sensor && rel.r >= r_min) out.push_back(rel);
  }
  std::sort(out.begin(), out.end(), [](const ActuatorRelatedness& a, const ActuatorRelatedness& b) {
    if (a.r != b.r) return a.r > b.r;
    return a.actuator < b.actuator;
  });
  if (k >= 0 && out.size() > static_cast<std::size_t>(k)) out.resize(k);
  return out;
}

}  // namespace scdt
