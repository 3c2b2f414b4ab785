#pragma once

#include <utility>
#include <vector>

#include "egae/graph.hpp"
#include "egae/model.hpp"
#include "egae/rng.hpp"

namespace egae_test {

inline egae::SparseGraph random_graph(int n, double p, egae::Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return egae::SparseGraph::from_edges(n, edges);
}

inline egae::DenseMatrix random_matrix(int n, int k, egae::Rng& rng, double lo = -1.0,
                                       double hi = 1.0) {
  egae::DenseMatrix m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Ideal orthogonal-block embedding: clusters own disjoint coordinate
// groups; rows are unit vectors with non-negative entries tightly aligned
// to a per-cluster direction, so cross-cluster inner products are exactly
// zero and within-cluster ones stay close to 1.
struct BlockEmbedding {
  egae::Embedding z;
  std::vector<int> labels;
};

inline BlockEmbedding make_block_embedding(const std::vector<int>& sizes, egae::Rng& rng,
                                           int dims_per_cluster = 3, double spread = 0.1) {
  const int c = static_cast<int>(sizes.size());
  int n = 0;
  for (int s : sizes) n += s;
  BlockEmbedding out;
  out.z.z = egae::DenseMatrix::Zero(n, c * dims_per_cluster);
  out.labels.reserve(n);
  int row = 0;
  for (int k = 0; k < c; ++k) {
    egae::Vector base(dims_per_cluster);
    for (int j = 0; j < dims_per_cluster; ++j) base[j] = 0.5 + rng.uniform();
    base /= base.norm();
    for (int i = 0; i < sizes[k]; ++i, ++row) {
      egae::Vector v = base;
      for (int j = 0; j < dims_per_cluster; ++j) v[j] += spread * rng.uniform();
      v = v.cwiseMax(0.0);
      v /= v.norm();
      out.z.z.block(row, k * dims_per_cluster, 1, dims_per_cluster) = v.transpose();
      out.labels.push_back(k);
    }
  }
  return out;
}

struct InnerProductStats {
  double mean_intra = 0.0;
  double mean_cross = 0.0;
};

inline InnerProductStats inner_product_stats(const egae::DenseMatrix& z,
                                             const std::vector<int>& labels) {
  InnerProductStats s;
  double n_intra = 0.0, n_cross = 0.0;
  const int n = static_cast<int>(z.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double ip = z.row(i).dot(z.row(j));
      if (labels[i] == labels[j]) {
        s.mean_intra += ip;
        n_intra += 1.0;
      } else {
        s.mean_cross += ip;
        n_cross += 1.0;
      }
    }
  if (n_intra > 0.0) s.mean_intra /= n_intra;
  if (n_cross > 0.0) s.mean_cross /= n_cross;
  return s;
}

}  // namespace egae_test
