#include "scdt/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "scdt/errors.hpp"

namespace scdt {

namespace {

// Lambda = 1/distance, capped so duplicate points (distance 0) stay finite.
constexpr double kLambdaCap = 1e12;

double to_lambda(double dist) { return dist > 1e-12 ? 1.0 / dist : kLambdaCap; }

struct LinkNode {
  int left = -1;
  int right = -1;
  double dist = 0.0;
  int size = 1;
};

struct CondensedRow {
  int parent = 0;
  int child = 0;  // condensed cluster id, or a point id when < n
  double lambda = 0.0;
  int size = 1;
};

// Single-linkage dendrogram over the mutual-reachability graph. Leaves are
// 0..n-1; internal nodes n..2n-2 in merge order.
std::vector<LinkNode> single_linkage(const Matrix& pts, int min_samples) {
  const int n = static_cast<int>(pts.rows);
  const int dim = static_cast<int>(pts.cols);

  std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double d = pts.at(i, c) - pts.at(j, c);
        s += d * d;
      }
      const double d = std::sqrt(s);
      dist[static_cast<std::size_t>(i) * n + j] = d;
      dist[static_cast<std::size_t>(j) * n + i] = d;
    }
  }

  // Core distance: distance to the min_samples-th other point.
  std::vector<double> core(n, 0.0);
  {
    const int k = std::min(min_samples, n - 1);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) row[j] = dist[static_cast<std::size_t>(i) * n + j];
      std::nth_element(row.begin(), row.begin() + k, row.end());
      core[i] = row[k];
    }
  }

  auto mreach = [&](int i, int j) {
    return std::max({core[i], core[j], dist[static_cast<std::size_t>(i) * n + j]});
  };

  // Prim's MST on the implicit complete mutual-reachability graph.
  struct Edge {
    int a, b;
    double w;
  };
  std::vector<Edge> mst;
  mst.reserve(n - 1);
  {
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::max());
    std::vector<int> from(n, 0);
    in_tree[0] = true;
    for (int j = 1; j < n; ++j) best[j] = mreach(0, j);
    for (int step = 1; step < n; ++step) {
      int pick = -1;
      double w = std::numeric_limits<double>::max();
      for (int j = 0; j < n; ++j) {
        if (!in_tree[j] && best[j] < w) {
          w = best[j];
          pick = j;
        }
      }
      mst.push_back({from[pick], pick, w});
      in_tree[pick] = true;
      for (int j = 0; j < n; ++j) {
        if (!in_tree[j]) {
          const double cand = mreach(pick, j);
          if (cand < best[j]) {
            best[j] = cand;
            from[j] = pick;
          }
        }
      }
    }
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  std::vector<LinkNode> tree(2 * n - 1);
  std::vector<int> parent(2 * n - 1, -1);
  std::vector<int> top_node(2 * n - 1);
  for (int i = 0; i < 2 * n - 1; ++i) top_node[i] = i;
  auto find = [&](int x) {
    while (parent[x] >= 0) x = parent[x];
    return x;
  };
  int next = n;
  for (const auto& e : mst) {
    const int ra = find(e.a);
    const int rb = find(e.b);
    const int na = top_node[ra];
    const int nb = top_node[rb];
    const int size_a = na < n ? 1 : tree[na].size;
    const int size_b = nb < n ? 1 : tree[nb].size;
    tree[next] = {na, nb, e.w, size_a + size_b};
    parent[ra] = next;
    parent[rb] = next;
    top_node[next] = next;
    ++next;
  }
  return tree;
}

// Collect the leaf points under a dendrogram node.
void collect_leaves(const std::vector<LinkNode>& tree, int node, int n, std::vector<int>& out) {
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (cur < n) {
      out.push_back(cur);
    } else {
      stack.push_back(tree[cur].left);
      stack.push_back(tree[cur].right);
    }
  }
}

}  // namespace

int density_min_cluster_size(std::size_t n, int floor_size, double frac) {
  const int scaled = static_cast<int>(std::ceil(frac * static_cast<double>(n)));
  return std::max(floor_size, scaled);
}

std::vector<int> cluster_density(const Matrix& points, int min_cluster_size) {
  const int n = static_cast<int>(points.rows);
  if (n == 0) throw UsageError("density clustering of empty input");
  if (min_cluster_size < 2) throw UsageError("min_cluster_size must be >= 2");
  if (n == 1) return {0};

  const std::vector<LinkNode> tree = single_linkage(points, min_cluster_size);
  const int root = 2 * n - 2;

  // Condense the dendrogram: only splits where both sides reach
  // min_cluster_size spawn new clusters; smaller splinters fall out of their
  // parent cluster as individual points.
  std::vector<CondensedRow> rows;
  std::vector<int> relabel(2 * n - 1, -1);
  std::vector<char> ignore(2 * n - 1, 0);
  int next_cluster = n;
  relabel[root] = next_cluster++;
  std::vector<int> order;  // top-down traversal of internal nodes
  {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      if (cur < n) continue;
      order.push_back(cur);
      stack.push_back(tree[cur].left);
      stack.push_back(tree[cur].right);
    }
  }
  for (const int node : order) {
    if (ignore[node]) continue;
    const int l = tree[node].left;
    const int r = tree[node].right;
    const double lambda = to_lambda(tree[node].dist);
    const int sl = l < n ? 1 : tree[l].size;
    const int sr = r < n ? 1 : tree[r].size;
    const int cluster = relabel[node];

    auto drop_points = [&](int side) {
      std::vector<int> leaves;
      collect_leaves(tree, side, n, leaves);
      for (const int p : leaves) rows.push_back({cluster, p, lambda, 1});
      std::vector<int> stack{side};
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        if (cur < n) continue;
        ignore[cur] = 1;
        stack.push_back(tree[cur].left);
        stack.push_back(tree[cur].right);
      }
    };

    if (sl >= min_cluster_size && sr >= min_cluster_size) {
      relabel[l] = next_cluster++;
      rows.push_back({cluster, relabel[l], lambda, sl});
      relabel[r] = next_cluster++;
      rows.push_back({cluster, relabel[r], lambda, sr});
    } else if (sl < min_cluster_size && sr < min_cluster_size) {
      drop_points(l);
      drop_points(r);
    } else if (sl < min_cluster_size) {
      drop_points(l);
      if (r >= n) relabel[r] = cluster;
      else rows.push_back({cluster, r, lambda, 1});
    } else {
      drop_points(r);
      if (l >= n) relabel[l] = cluster;
      else rows.push_back({cluster, l, lambda, 1});
    }
  }

  const int cluster_count = next_cluster - n;
  std::vector<double> birth(cluster_count, 0.0);
  for (const auto& row : rows) {
    if (row.child >= n) birth[row.child - n] = row.lambda;
  }
  std::vector<double> stability(cluster_count, 0.0);
  for (const auto& row : rows) {
    stability[row.parent - n] += (row.lambda - birth[row.parent - n]) * row.size;
  }

  // Excess-of-mass selection, leaves upward. The root competes like any
  // other cluster so unimodal inputs can come back as a single cluster.
  std::vector<std::vector<int>> children(cluster_count);
  for (const auto& row : rows) {
    if (row.child >= n) children[row.parent - n].push_back(row.child - n);
  }
  std::vector<char> selected(cluster_count, 0);
  std::vector<double> total(cluster_count, 0.0);
  for (int c = cluster_count - 1; c >= 0; --c) {
    if (children[c].empty()) {
      total[c] = stability[c];
      selected[c] = 1;
      continue;
    }
    double child_sum = 0.0;
    for (const int ch : children[c]) child_sum += total[ch];
    if (stability[c] >= child_sum) {
      selected[c] = 1;
      total[c] = stability[c];
      std::vector<int> stack(children[c]);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        selected[cur] = 0;
        for (const int ch : children[cur]) stack.push_back(ch);
      }
    } else {
      total[c] = std::max(stability[c], child_sum);
    }
  }

  // Assign points: walk up from the cluster the point fell out of until a
  // selected cluster is found; none -> noise.
  std::vector<int> cluster_parent(cluster_count, -1);
  for (const auto& row : rows) {
    if (row.child >= n) cluster_parent[row.child - n] = row.parent - n;
  }
  std::vector<int> label(n, -1);
  for (const auto& row : rows) {
    if (row.child >= n) continue;
    int c = row.parent - n;
    while (c >= 0 && !selected[c]) c = cluster_parent[c];
    if (c >= 0) label[row.child] = c;
  }

  // Compact labels ordered by first member, so output is stable.
  std::vector<int> remap(cluster_count, -1);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0 && remap[label[i]] < 0) remap[label[i]] = k++;
  }
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0) label[i] = remap[label[i]];
  }

  if (k == 0) return std::vector<int>(n, 0);  // everything noise: one cluster

  // Noise points join the nearest extracted centroid (ties -> lower label).
  std::vector<std::vector<double>> centroid(k, std::vector<double>(points.cols, 0.0));
  std::vector<int> count(k, 0);
  for (int i = 0; i < n; ++i) {
    if (label[i] < 0) continue;
    for (std::size_t c = 0; c < points.cols; ++c) centroid[label[i]][c] += points.at(i, c);
    ++count[label[i]];
  }
  for (int c = 0; c < k; ++c) {
    for (double& v : centroid[c]) v /= static_cast<double>(count[c]);
  }
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t col = 0; col < points.cols; ++col) {
        const double d = points.at(i, col) - centroid[c][col];
        s += d * d;
      }
      if (s < best_d) {
        best_d = s;
        best = c;
      }
    }
    label[i] = best;
  }
  return label;
}

}  // namespace scdt
