#include "scdt/rulelearn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <utility>

#include "scdt/density.hpp"
#include "scdt/errors.hpp"
#include "scdt/features.hpp"
#include "scdt/rng.hpp"

namespace scdt {
namespace {

std::vector<double> matrix_column(const Matrix& m, std::size_t j) {
  std::vector<double> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = m.at(i, j);
  return out;
}

// Median/IQR scaling of every column, IQR floored so constant columns map to
// zero instead of blowing up.
Matrix robust_scale_columns(const Matrix& m, double floor) {
  Matrix out(m.rows, m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    std::vector<double> col = matrix_column(m, j);
    const double med = quantile(col, 0.5);
    // Columns whose IQR underflows the floor are effectively constant; divide
    // by 1 instead of the floor so a stray integer bump (e.g. one negative
    // jump in an otherwise jump-free key) lands ~1 unit away rather than 1e6,
    // which would swamp every real distance in the merge geometry.
    double iqr = quantile(col, 0.75) - quantile(col, 0.25);
    if (iqr < floor) iqr = 1.0;
    for (std::size_t i = 0; i < m.rows; ++i) out.at(i, j) = (m.at(i, j) - med) / iqr;
  }
  return out;
}

double point_dist(const Matrix& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  const double* pa = m.row(a);
  const double* pb = m.row(b);
  for (std::size_t j = 0; j < m.cols; ++j) {
    const double d = pa[j] - pb[j];
    s += d * d;
  }
  return std::sqrt(s);
}

// Incremental silhouette bookkeeping for the greedy merge loop. sums[i][c]
// holds the total distance from point i to every member of cluster c, so a
// candidate merge is scored in O(n * K) instead of re-deriving all pairwise
// distances.
struct MergeScorer {
  const Matrix& points;
  std::vector<std::vector<double>> sums;   // n x K
  std::vector<int> sizes;                  // K
  std::vector<int> labels;                 // n

  MergeScorer(const Matrix& pts, const std::vector<ModeCluster>& clusters) : points(pts) {
    const std::size_t n = points.rows;
    const std::size_t k = clusters.size();
    sums.assign(n, std::vector<double>(k, 0.0));
    sizes.assign(k, 0);
    labels.assign(n, -1);
    for (std::size_t c = 0; c < k; ++c) {
      sizes[c] = static_cast<int>(clusters[c].members.size());
      for (int i : clusters[c].members) labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = point_dist(points, i, j);
        sums[i][static_cast<std::size_t>(labels[j])] += d;
        sums[j][static_cast<std::size_t>(labels[i])] += d;
      }
    }
  }

  // Mean silhouette if clusters a and b were one cluster; pass a == b for
  // the current partition.
  double score_merged(int a, int b) const {
    const std::size_t n = points.rows;
    const std::size_t k = sizes.size();
    int active = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0 && (a == b || static_cast<int>(c) != b)) ++active;
    }
    if (active <= 1 || n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int own = labels[i];
      double own_sum = sums[i][static_cast<std::size_t>(own)];
      int own_size = sizes[static_cast<std::size_t>(own)];
      if (a != b && (own == a || own == b)) {
        own = a;
        own_sum = sums[i][static_cast<std::size_t>(a)] + sums[i][static_cast<std::size_t>(b)];
        own_size = sizes[static_cast<std::size_t>(a)] + sizes[static_cast<std::size_t>(b)];
      }
      if (own_size <= 1) continue;  // singleton scores 0
      const double ai = own_sum / (own_size - 1);
      double bi = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (static_cast<int>(c) == own || sizes[c] == 0) continue;
        if (a != b && static_cast<int>(c) == b) continue;
        double cs = sums[i][c];
        int cn = sizes[c];
        if (a != b && static_cast<int>(c) == a) {
          cs = sums[i][static_cast<std::size_t>(a)] + sums[i][static_cast<std::size_t>(b)];
          cn = sizes[static_cast<std::size_t>(a)] + sizes[static_cast<std::size_t>(b)];
        }
        bi = std::min(bi, cs / cn);
      }
      const double denom = std::max(ai, bi);
      if (denom > 0.0 && std::isfinite(bi)) total += (bi - ai) / denom;
    }
    return total / static_cast<double>(n);
  }

  void apply_merge(int a, int b) {
    for (auto& row : sums) {
      row[static_cast<std::size_t>(a)] += row[static_cast<std::size_t>(b)];
      row[static_cast<std::size_t>(b)] = 0.0;
    }
    sizes[static_cast<std::size_t>(a)] += sizes[static_cast<std::size_t>(b)];
    sizes[static_cast<std::size_t>(b)] = 0;
    for (auto& l : labels) {
      if (l == b) l = a;
    }
  }
};

std::vector<double> centroid_of(const Matrix& points, const std::vector<int>& members) {
  std::vector<double> c(points.cols, 0.0);
  for (int i : members) {
    const double* p = points.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < points.cols; ++j) c[j] += p[j];
  }
  for (double& v : c) v /= static_cast<double>(members.size());
  return c;
}

double centroid_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<LevelGroup> group_by_level(const std::vector<double>& f_means, double sensor_range,
                                       double gap_frac, double gap_abs) {
  std::vector<LevelGroup> groups;
  if (f_means.empty()) return groups;
  std::vector<int> order(f_means.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (f_means[static_cast<std::size_t>(a)] != f_means[static_cast<std::size_t>(b)])
      return f_means[static_cast<std::size_t>(a)] < f_means[static_cast<std::size_t>(b)];
    return a < b;
  });
  const double cut = std::max(gap_abs, gap_frac * sensor_range);
  LevelGroup cur;
  cur.indices.push_back(order[0]);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const double gap = f_means[static_cast<std::size_t>(order[i])] -
                       f_means[static_cast<std::size_t>(order[i - 1])];
    if (gap > cut) {
      groups.push_back(std::move(cur));
      cur = LevelGroup{};
    }
    cur.indices.push_back(order[i]);
  }
  groups.push_back(std::move(cur));
  return groups;
}

double mean_silhouette(const Matrix& points, const std::vector<int>& labels, int clusters) {
  const std::size_t n = points.rows;
  if (n == 0 || clusters <= 1) return 0.0;
  std::vector<int> sizes(static_cast<std::size_t>(clusters), 0);
  for (int l : labels) sizes[static_cast<std::size_t>(l)]++;
  int active = 0;
  for (int s : sizes) {
    if (s > 0) ++active;
  }
  if (active <= 1) return 0.0;
  double total = 0.0;
  std::vector<double> sum(static_cast<std::size_t>(clusters));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(labels[j])] += point_dist(points, i, j);
    }
    const int own = labels[i];
    if (sizes[static_cast<std::size_t>(own)] <= 1) continue;
    const double ai = sum[static_cast<std::size_t>(own)] / (sizes[static_cast<std::size_t>(own)] - 1);
    double bi = std::numeric_limits<double>::infinity();
    for (int c = 0; c < clusters; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      bi = std::min(bi, sum[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
    }
    const double denom = std::max(ai, bi);
    if (denom > 0.0 && std::isfinite(bi)) total += (bi - ai) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<ModeCluster> consolidate_modes(std::vector<ModeCluster> clusters,
                                           const Matrix& scaled_points) {
  // Canonical ordering so the greedy loop below is input-order independent.
  clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                [](const ModeCluster& c) { return c.members.empty(); }),
                 clusters.end());
  for (auto& c : clusters) std::sort(c.members.begin(), c.members.end());
  std::sort(clusters.begin(), clusters.end(), [](const ModeCluster& a, const ModeCluster& b) {
    return a.members.front() < b.members.front();
  });
  if (clusters.size() <= 1) return clusters;

  // Phase 1: clusters too small to calibrate get absorbed into the cluster
  // with the nearest centroid, smallest first.
  constexpr int kMinCalibratable = 3;
  while (clusters.size() > 1) {
    int smallest = -1;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (static_cast<int>(clusters[c].members.size()) >= kMinCalibratable) continue;
      if (smallest < 0 ||
          clusters[c].members.size() < clusters[static_cast<std::size_t>(smallest)].members.size())
        smallest = static_cast<int>(c);
    }
    if (smallest < 0) break;
    const auto src = centroid_of(scaled_points, clusters[static_cast<std::size_t>(smallest)].members);
    int target = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (static_cast<int>(c) == smallest) continue;
      const double d = centroid_dist(src, centroid_of(scaled_points, clusters[c].members));
      if (d < best) {
        best = d;
        target = static_cast<int>(c);
      }
    }
    auto& dst = clusters[static_cast<std::size_t>(target)].members;
    auto& from = clusters[static_cast<std::size_t>(smallest)].members;
    dst.insert(dst.end(), from.begin(), from.end());
    std::sort(dst.begin(), dst.end());
    clusters.erase(clusters.begin() + smallest);
  }
  if (clusters.size() <= 1) return clusters;

  // Phase 2: greedy merges while they strictly improve mean silhouette.
  MergeScorer scorer(scaled_points, clusters);
  std::vector<int> alive(clusters.size());
  std::iota(alive.begin(), alive.end(), 0);
  while (alive.size() > 1) {
    const double current = scorer.score_merged(alive[0], alive[0]);
    double best_gain = 0.0;
    int best_a = -1, best_b = -1;
    for (std::size_t x = 0; x < alive.size(); ++x) {
      for (std::size_t y = x + 1; y < alive.size(); ++y) {
        const double gain = scorer.score_merged(alive[x], alive[y]) - current;
        if (gain > best_gain) {
          best_gain = gain;
          best_a = alive[x];
          best_b = alive[y];
        }
      }
    }
    if (best_a < 0) break;
    scorer.apply_merge(best_a, best_b);
    auto& am = clusters[static_cast<std::size_t>(best_a)].members;
    auto& bm = clusters[static_cast<std::size_t>(best_b)].members;
    am.insert(am.end(), bm.begin(), bm.end());
    std::sort(am.begin(), am.end());
    bm.clear();
    alive.erase(std::find(alive.begin(), alive.end(), best_b));
  }
  std::vector<ModeCluster> out;
  for (int c : alive) out.push_back(std::move(clusters[static_cast<std::size_t>(c)]));
  std::sort(out.begin(), out.end(), [](const ModeCluster& a, const ModeCluster& b) {
    return a.members.front() < b.members.front();
  });
  return out;
}

QuantileEnvelope build_envelope(const Matrix& descriptors, const std::vector<int>& members,
                                double alpha) {
  if (members.empty()) throw UsageError("build_envelope: empty member list");
  QuantileEnvelope env;
  env.alpha = alpha;
  std::vector<double> vals(members.size());
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    for (std::size_t k = 0; k < members.size(); ++k)
      vals[k] = descriptors.at(static_cast<std::size_t>(members[k]), j);
    env.lo[j] = quantile(vals, alpha);
    env.hi[j] = quantile(vals, 1.0 - alpha);
  }
  return env;
}

RobustScaler fit_robust_scaler(const Matrix& descriptors, double floor) {
  if (descriptors.rows == 0) throw UsageError("fit_robust_scaler: empty matrix");
  RobustScaler s;
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    std::vector<double> col = matrix_column(descriptors, j);
    s.med[j] = quantile(col, 0.5);
    s.iqr[j] = std::max(quantile(col, 0.75) - quantile(col, 0.25), floor);
  }
  return s;
}

double calibrate_threshold(const std::vector<double>& d2, double q, double theta_base,
                           int small_support) {
  if (d2.empty()) throw UsageError("calibrate_threshold: empty distance sample");
  double theta = quantile(d2, q);
  if (static_cast<int>(d2.size()) < small_support) theta = std::max(theta, theta_base);
  return theta;
}

RobustDistanceModel fit_distance_model(const Matrix& descriptors, const std::vector<int>& members,
                                       const RobustScaler& scaler, const EngineConfig& cfg) {
  if (members.empty()) throw UsageError("fit_distance_model: empty member list");
  RobustDistanceModel model;
  model.scaler = scaler;
  model.z_max = cfg.z_max;

  std::vector<Descriptor> scaled(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    Descriptor y;
    for (std::size_t j = 0; j < kDescriptorDims; ++j)
      y[j] = descriptors.at(static_cast<std::size_t>(members[k]), j);
    scaled[k] = scaler.scale(y);
  }
  std::vector<double> col(members.size());
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    for (std::size_t k = 0; k < members.size(); ++k) col[k] = scaled[k][j];
    model.mu[j] = quantile(col, 0.5);
    model.sigma[j] = std::max(quantile(col, 0.75) - quantile(col, 0.25), cfg.sigma_floor);
  }
  std::vector<double> d2(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    Descriptor y;
    for (std::size_t j = 0; j < kDescriptorDims; ++j)
      y[j] = descriptors.at(static_cast<std::size_t>(members[k]), j);
    d2[k] = model.distance2(y);
  }
  model.theta = calibrate_threshold(d2, cfg.q, cfg.theta_base, cfg.small_support);
  return model;
}

std::vector<ModeCluster> learn_modes_for_key(const Matrix& core8, const Matrix& desc13,
                                             double sensor_range, const EngineConfig& cfg,
                                             const Embedder& embedder, std::uint64_t key_seed) {
  (void)desc13;
  const std::size_t n = core8.rows;
  std::vector<double> f_means = matrix_column(core8, 0);
  const auto groups = group_by_level(f_means, sensor_range, cfg.level_gap_frac, cfg.level_gap_abs);

  std::vector<ModeCluster> clusters;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& idx = groups[gi].indices;
    Matrix sub(idx.size(), core8.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double* src = core8.row(static_cast<std::size_t>(idx[r]));
      std::copy(src, src + core8.cols, sub.row(r));
    }
    const std::uint64_t group_seed = derive_seed(key_seed, "level:" + std::to_string(gi));
    const Matrix embedded = embedder.embed(sub, group_seed);
    const int mcs = density_min_cluster_size(idx.size(), cfg.density_min_size, cfg.density_min_frac);
    const std::vector<int> labels = cluster_density(embedded, mcs);
    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<ModeCluster> local(static_cast<std::size_t>(std::max(k, 0)));
    for (std::size_t r = 0; r < labels.size(); ++r)
      local[static_cast<std::size_t>(labels[r])].members.push_back(idx[r]);
    for (auto& c : local) {
      if (!c.members.empty()) clusters.push_back(std::move(c));
    }
  }
  (void)n;
  const Matrix scaled = robust_scale_columns(core8, cfg.sigma_floor);
  return consolidate_modes(std::move(clusters), scaled);
}

LearnResult learn_rulebank(const Dataset& data, const Manifest& manifest,
                           const EngineConfig& cfg) {
  if (manifest.window < kMinWindowLength)
    throw UsageError("learn_rulebank: window must be at least " +
                     std::to_string(kMinWindowLength));
  if (data.rows == 0) throw UsageError("learn_rulebank: empty dataset");

  LearnResult result;
  // Discretizers are fit on the complete actuator columns, so rare contexts
  // still shape the state vocabulary.
  result.binnings.reserve(manifest.actuators.size());
  for (const auto& act : manifest.actuators)
    result.binnings.push_back(fit_binning(act, data.column(act), cfg));
  auto binning_of = [&](const std::string& name) -> const ActuatorBinning& {
    for (const auto& b : result.binnings) {
      if (b.actuator == name) return b;
    }
    throw UsageError("learn_rulebank: no binning for actuator '" + name + "'");
  };

  std::map<std::string, SensorRange> ranges;
  for (const auto& sensor : manifest.sensors) {
    const auto& col = data.column(sensor);
    SensorRange r{col.front(), col.front()};
    for (double v : col) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
    ranges[sensor] = r;
  }

  // Bucket windows by (sensor, discretized actuator states).
  std::map<SacKey, std::vector<Descriptor>> buckets;
  for (const auto& sensor : manifest.sensors) {
    const auto& scope = manifest.scope_of(sensor);
    for (const auto& w : make_windows(data, manifest, sensor)) {
      SacKey key;
      key.sensor = sensor;
      key.states.reserve(scope.size());
      for (std::size_t k = 0; k < scope.size(); ++k)
        key.states.push_back(binning_of(scope[k]).discretize(w.ac_raw[k]));
      buckets[key].push_back(extract_descriptor(w));
    }
  }

  struct KeyTask {
    SacKey key;
    Matrix desc13;
    Matrix core8;
  };
  std::vector<KeyTask> tasks;
  for (auto& [key, descs] : buckets) {
    if (static_cast<int>(descs.size()) < cfg.min_windows) continue;  // too rare to model
    KeyTask t;
    t.key = key;
    t.desc13 = Matrix(descs.size(), kDescriptorDims);
    t.core8 = Matrix(descs.size(), 8);
    for (std::size_t i = 0; i < descs.size(); ++i) {
      std::copy(descs[i].begin(), descs[i].end(), t.desc13.row(i));
      // Core dynamics features occupy descriptor dims 5..12 in order.
      std::copy(descs[i].begin() + kDimMean, descs[i].end(), t.core8.row(i));
    }
    tasks.push_back(std::move(t));
  }

  const NeighborGraphEmbedder embedder(NeighborGraphParams{
      cfg.umap_neighbors, cfg.umap_min_dist, cfg.umap_epochs, 1.0, 5});
  std::vector<KeyRules> learned(tasks.size());

  auto run_task = [&](std::size_t ti) {
    const KeyTask& t = tasks[ti];
    const double span = ranges.at(t.key.sensor).span();
    const std::uint64_t key_seed = derive_seed(cfg.seed, t.key.to_string());
    auto clusters = learn_modes_for_key(t.core8, t.desc13, span, cfg, embedder, key_seed);
    // Dominant mode first; ties broken by earliest member so the order is
    // reproducible.
    std::sort(clusters.begin(), clusters.end(), [](const ModeCluster& a, const ModeCluster& b) {
      if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
      return a.members.front() < b.members.front();
    });
    const RobustScaler scaler = fit_robust_scaler(t.desc13, cfg.sigma_floor);
    KeyRules kr;
    kr.key = t.key;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      ModeRule mode;
      mode.mode_id = static_cast<int>(c);
      mode.support = static_cast<int>(clusters[c].members.size());
      mode.envelope = build_envelope(t.desc13, clusters[c].members, cfg.alpha);
      mode.distance = fit_distance_model(t.desc13, clusters[c].members, scaler, cfg);
      kr.modes.push_back(std::move(mode));
    }
    learned[ti] = std::move(kr);
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1 || tasks.size() <= 1) {
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t ti = next.fetch_add(1); ti < tasks.size(); ti = next.fetch_add(1))
          run_task(ti);
      });
    }
    for (auto& th : pool) th.join();
  }

  result.bank.meta.window = manifest.window;
  result.bank.meta.stride = manifest.stride;
  result.bank.meta.alpha = cfg.alpha;
  result.bank.meta.q = cfg.q;
  result.bank.meta.rho = cfg.rho;
  result.bank.meta.z_max = cfg.z_max;
  result.bank.meta.min_windows = cfg.min_windows;
  result.bank.meta.seed = cfg.seed;
  result.bank.meta.manifest_digest = manifest.digest();
  result.bank.meta.sensor_ranges = std::move(ranges);
  result.bank.keys = std::move(learned);  // tasks came from an ordered map
  return result;
}

}  // namespace scdt
