#pragma once

#include <vector>

#include "scdt/matrix.hpp"

namespace scdt {

// Density clustering over a 2-D embedding: mutual-reachability minimum
// spanning tree, condensed cluster hierarchy, and stability-based cluster
// extraction. Returns one label in [0, K) per point — noise points are
// reassigned to the nearest extracted cluster centroid, and when everything
// is noise the whole input becomes a single cluster. Deterministic.
std::vector<int> cluster_density(const Matrix& points, int min_cluster_size);

// min_cluster_size rule shared by the learning pipeline: max(floor_size,
// ceil(frac * n)).
int density_min_cluster_size(std::size_t n, int floor_size, double frac);

}  // namespace scdt
