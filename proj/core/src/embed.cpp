#include "scdt/embed.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "scdt/errors.hpp"
#include "scdt/rng.hpp"

namespace scdt {

namespace {

constexpr double kStdFloor = 1e-12;

Matrix standardize(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) mean += m.at(i, j);
    mean /= static_cast<double>(m.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double d = m.at(i, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(m.rows));
    const double scale = sd > kStdFloor ? sd : 1.0;
    for (std::size_t i = 0; i < m.rows; ++i) out.at(i, j) = (m.at(i, j) - mean) / scale;
  }
  return out;
}

// Top-2 principal components of an already standardized matrix. Eigenvector
// signs are normalized (largest-magnitude entry positive) so the projection
// is reproducible across runs.
Matrix pca2(const Matrix& z) {
  const auto n = static_cast<Eigen::Index>(z.rows);
  const auto d = static_cast<Eigen::Index>(z.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      z.data.data(), n, d);
  Eigen::MatrixXd cov = (x.transpose() * x) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Matrix out(z.rows, 2);
  for (int c = 0; c < 2; ++c) {
    // Eigenvalues come out ascending; column d-1 is the leading component.
    Eigen::Index col = d - 1 - c;
    if (col < 0) continue;  // fewer feature dims than output dims: leave zeros
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg_max = 0;
    v.cwiseAbs().maxCoeff(&arg_max);
    if (v(arg_max) < 0) v = -v;
    Eigen::VectorXd proj = x * v;
    for (Eigen::Index i = 0; i < n; ++i) out.at(static_cast<std::size_t>(i), c) = proj(i);
  }
  return out;
}

struct FuzzyEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Smooth-kNN calibration: find sigma so that sum_j exp(-(d_j - rho)/sigma)
// hits log2(k), giving each point a comparable effective neighborhood size.
double calibrate_sigma(const std::vector<double>& dists, double rho, double target) {
  double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
  for (int it = 0; it < 64; ++it) {
    double sum = 0.0;
    for (double d : dists) {
      const double gap = d - rho;
      sum += gap <= 0.0 ? 1.0 : std::exp(-gap / mid);
    }
    if (std::fabs(sum - target) < 1e-5) break;
    if (sum > target) {
      hi = mid;
      mid = 0.5 * (lo + hi);
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
    }
  }
  return std::max(mid, 1e-8);
}

// Fit the rational attraction curve 1/(1 + a t^{2b}) to the ideal min_dist
// kernel. Coarse-to-fine grid search; deterministic and cheap, and only runs
// once per embedding call.
void fit_curve(double min_dist, double& a_out, double& b_out) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const double t = 3.0 * (i + 1) / kSamples;
    xs[i] = t;
    ys[i] = t < min_dist ? 1.0 : std::exp(-(t - min_dist));
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b));
      s += (f - ys[i]) * (f - ys[i]);
    }
    return s;
  };
  double best_a = 1.0, best_b = 1.0, best = std::numeric_limits<double>::max();
  double a_lo = 0.2, a_hi = 5.0, b_lo = 0.5, b_hi = 2.5;
  for (int level = 0; level < 4; ++level) {
    constexpr int kGrid = 24;
    for (int i = 0; i <= kGrid; ++i) {
      const double a = a_lo + (a_hi - a_lo) * i / kGrid;
      for (int j = 0; j <= kGrid; ++j) {
        const double b = b_lo + (b_hi - b_lo) * j / kGrid;
        const double s = sse(a, b);
        if (s < best) {
          best = s;
          best_a = a;
          best_b = b;
        }
      }
    }
    const double a_span = (a_hi - a_lo) / kGrid, b_span = (b_hi - b_lo) / kGrid;
    a_lo = std::max(1e-3, best_a - 2 * a_span);
    a_hi = best_a + 2 * a_span;
    b_lo = std::max(0.05, best_b - 2 * b_span);
    b_hi = best_b + 2 * b_span;
  }
  a_out = best_a;
  b_out = best_b;
}

double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

Matrix neighbor_graph_layout(const Matrix& z, const NeighborGraphParams& p, std::uint64_t seed) {
  const int n = static_cast<int>(z.rows);
  const int dim = static_cast<int>(z.cols);
  const int k = std::min(p.n_neighbors, n - 1);

  // Exact kNN; inputs here are per-context feature tables, small enough that
  // O(n^2) search is the simplest correct choice.
  std::vector<std::vector<std::pair<double, int>>> knn(n);
  {
    std::vector<std::pair<double, int>> row(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) {
          const double d = z.at(i, c) - z.at(j, c);
          s += d * d;
        }
        row[j] = {std::sqrt(s), j};
      }
      row[i].first = std::numeric_limits<double>::max();  // exclude self
      std::partial_sort(row.begin(), row.begin() + k, row.end());
      knn[i].assign(row.begin(), row.begin() + k);
    }
  }

  // Directed membership strengths, then symmetrize: w + w' - w*w'.
  const double target = std::log2(static_cast<double>(k));
  std::unordered_map<std::int64_t, double> sym;
  sym.reserve(static_cast<std::size_t>(n) * k);
  {
    std::vector<double> dists(k);
    std::unordered_map<std::int64_t, double> directed;
    directed.reserve(static_cast<std::size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
      double rho = 0.0;
      for (const auto& [d, j] : knn[i]) {
        if (d > 0.0) {
          rho = d;
          break;
        }
      }
      for (int c = 0; c < k; ++c) dists[c] = knn[i][c].first;
      const double sigma = calibrate_sigma(dists, rho, target);
      for (const auto& [d, j] : knn[i]) {
        const double gap = d - rho;
        const double w = gap <= 0.0 ? 1.0 : std::exp(-gap / sigma);
        directed[static_cast<std::int64_t>(i) * n + j] = w;
      }
    }
    for (const auto& [key, w] : directed) {
      const int i = static_cast<int>(key / n);
      const int j = static_cast<int>(key % n);
      const std::int64_t rev = static_cast<std::int64_t>(j) * n + i;
      const auto it = directed.find(rev);
      const double wr = it == directed.end() ? 0.0 : it->second;
      const std::int64_t canonical =
          i < j ? key : static_cast<std::int64_t>(j) * n + i;
      sym[canonical] = w + wr - w * wr;
    }
  }

  std::vector<FuzzyEdge> edges;
  edges.reserve(sym.size());
  for (const auto& [key, w] : sym) {
    if (w <= 0.0) continue;
    edges.push_back({static_cast<int>(key / n), static_cast<int>(key % n), w});
  }
  // Hash-map iteration order is not deterministic across libraries; sort so
  // the optimization consumes edges in a stable order.
  std::sort(edges.begin(), edges.end(), [](const FuzzyEdge& x, const FuzzyEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  double a = 0.0, b = 0.0;
  fit_curve(p.min_dist, a, b);

  // Principal-component init keeps global structure and makes runs with the
  // same seed byte-identical.
  Matrix y = pca2(z);
  double max_abs = 0.0;
  for (double v : y.data) max_abs = std::max(max_abs, std::fabs(v));
  const double init_scale = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
  for (double& v : y.data) v *= init_scale;

  double max_w = 0.0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);
  std::vector<double> epochs_per_sample(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    epochs_per_sample[e] = max_w / edges[e].weight;
  }
  std::vector<double> next_due(edges.size());
  std::vector<double> next_neg_due(edges.size(), 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) next_due[e] = epochs_per_sample[e];

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_int_distribution<int> pick(0, n - 1);
  const double neg_rate = static_cast<double>(p.negative_sample_rate);

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    const double alpha = p.learning_rate * (1.0 - static_cast<double>(epoch) / p.epochs);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (next_due[e] > static_cast<double>(epoch)) continue;
      const int i = edges[e].a;
      const int j = edges[e].b;
      double* yi = y.row(i);
      double* yj = y.row(j);

      double dsq = 0.0;
      for (int c = 0; c < 2; ++c) dsq += (yi[c] - yj[c]) * (yi[c] - yj[c]);
      if (dsq > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(dsq, b - 1.0) / (a * std::pow(dsq, b) + 1.0);
        for (int c = 0; c < 2; ++c) {
          const double g = clip4(coeff * (yi[c] - yj[c]));
          yi[c] += alpha * g;
          yj[c] -= alpha * g;
        }
      }
      next_due[e] += epochs_per_sample[e];

      const double eps_neg = epochs_per_sample[e] / neg_rate;
      const int n_neg = static_cast<int>((static_cast<double>(epoch) - next_neg_due[e]) / eps_neg);
      for (int s = 0; s < n_neg; ++s) {
        const int other = pick(rng);
        if (other == i) continue;
        double* yo = y.row(other);
        double d2 = 0.0;
        for (int c = 0; c < 2; ++c) d2 += (yi[c] - yo[c]) * (yi[c] - yo[c]);
        if (d2 > 0.0) {
          const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
          for (int c = 0; c < 2; ++c) yi[c] += alpha * clip4(coeff * (yi[c] - yo[c]));
        } else {
          for (int c = 0; c < 2; ++c) yi[c] += alpha * 4.0;
        }
      }
      next_neg_due[e] += n_neg * eps_neg;
    }
  }
  return y;
}

}  // namespace

Matrix NeighborGraphEmbedder::embed(const Matrix& features, std::uint64_t seed) const {
  if (features.rows == 0) throw UsageError("embed of empty feature matrix");
  for (std::size_t i = 0; i < features.data.size(); ++i) {
    if (!std::isfinite(features.data[i])) {
      throw DataError("non-finite feature value at flat index " + std::to_string(i));
    }
  }

  const Matrix z = standardize(features);
  const std::size_t n = features.rows;

  if (n <= 2) {
    // Too small for any geometry: the standardized first two coordinates
    // (zeros when a column is constant, e.g. the single-point case).
    Matrix out(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      out.at(i, 0) = z.cols > 0 ? z.at(i, 0) : 0.0;
      out.at(i, 1) = z.cols > 1 ? z.at(i, 1) : 0.0;
    }
    return out;
  }
  if (n < static_cast<std::size_t>(params_.n_neighbors) + 2) {
    return pca2(z);
  }
  return neighbor_graph_layout(z, params_, seed);
}

}  // namespace scdt
