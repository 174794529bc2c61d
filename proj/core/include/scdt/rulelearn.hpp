#pragma once

#include <cstdint>
#include <vector>

#include "scdt/binning.hpp"
#include "scdt/config.hpp"
#include "scdt/dataset.hpp"
#include "scdt/embed.hpp"
#include "scdt/matrix.hpp"
#include "scdt/rulebank.hpp"

namespace scdt {

struct LevelGroup {
  std::vector<int> indices;  // ascending by f_mean
};

// Split windows into coarse level regimes: sort by f_mean and cut where the
// gap between neighbors exceeds max(gap_abs, gap_frac * sensor range).
std::vector<LevelGroup> group_by_level(const std::vector<double>& f_means, double sensor_range,
                                       double gap_frac, double gap_abs);

struct ModeCluster {
  std::vector<int> members;  // ascending window indices within the key
};

// Mean silhouette of a labeled point set; singleton-cluster points (and a
// single-cluster partition) score 0.
double mean_silhouette(const Matrix& points, const std::vector<int>& labels, int clusters);

// Merge fragmented clusters: absorb clusters with fewer than 3 members into
// their nearest neighbor, then greedily apply the pair merge that most
// improves mean silhouette until no merge helps. Every input member ends up
// in exactly one output cluster.
std::vector<ModeCluster> consolidate_modes(std::vector<ModeCluster> clusters,
                                           const Matrix& scaled_points);

// Per-dimension [Q_alpha, Q_{1-alpha}] envelope over the member descriptors.
QuantileEnvelope build_envelope(const Matrix& descriptors, const std::vector<int>& members,
                                double alpha);

// Median/IQR column scaler over all descriptors of a key (IQR floored).
RobustScaler fit_robust_scaler(const Matrix& descriptors, double floor);

// theta = Q_q of the training distances, floored at theta_base when the mode
// has little support.
double calibrate_threshold(const std::vector<double>& d2, double q, double theta_base,
                           int small_support);

RobustDistanceModel fit_distance_model(const Matrix& descriptors, const std::vector<int>& members,
                                       const RobustScaler& scaler, const EngineConfig& cfg);

// Mode discovery for one context key: level grouping, 2-D embedding, density
// clustering, consolidation. Returns final clusters over the key's windows.
std::vector<ModeCluster> learn_modes_for_key(const Matrix& core8, const Matrix& desc13,
                                             double sensor_range, const EngineConfig& cfg,
                                             const Embedder& embedder, std::uint64_t key_seed);

struct LearnResult {
  RuleBank bank;
  std::vector<ActuatorBinning> binnings;
};

// Full training pass over an ingested dataset. Deterministic for a fixed
// (dataset, manifest, config) triple, including under parallel execution.
LearnResult learn_rulebank(const Dataset& data, const Manifest& manifest,
                           const EngineConfig& cfg);

}  // namespace scdt
