#pragma once

#include <cstdint>
#include <memory>

#include "scdt/matrix.hpp"

namespace scdt {

// Pluggable 2-D embedding used before density clustering. Implementations
// must be deterministic for a fixed (input, seed) pair.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Matrix embed(const Matrix& features, std::uint64_t seed) const = 0;
};

struct NeighborGraphParams {
  int n_neighbors = 15;
  double min_dist = 0.1;
  int epochs = 200;
  double learning_rate = 1.0;
  int negative_sample_rate = 5;
};

// Default embedder: fuzzy nearest-neighbor graph + stochastic force layout.
// Small inputs (n < n_neighbors + 2) fall back to the top-2 principal
// components of the standardized matrix; n <= 2 returns the standardized
// first two coordinates (zero-padded when degenerate).
class NeighborGraphEmbedder final : public Embedder {
 public:
  explicit NeighborGraphEmbedder(NeighborGraphParams params = {}) : params_(params) {}
  Matrix embed(const Matrix& features, std::uint64_t seed) const override;

 private:
  NeighborGraphParams params_;
};

}  // namespace scdt
