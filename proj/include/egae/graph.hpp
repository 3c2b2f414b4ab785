#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egae/csr.hpp"
#include "egae/dense.hpp"

namespace egae {

// Symmetric binary (or non-negative weighted) adjacency with an empty
// diagonal; self-loops appear only inside Laplacian construction.
struct SparseGraph {
  int n = 0;
  CsrMatrix adj;

  std::int64_t edge_count() const { return adj.nnz() / 2; }

  // Validates symmetry, empty diagonal, and non-negative values.
  static SparseGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges);
  static SparseGraph from_weighted_edges(
      int n, const std::vector<std::tuple<int, int, double>>& edges);
};

using FeatureMatrix = DenseMatrix;  // n x d, row i = features of node i

// L_hat = D_hat^(-1/2) (I + A) D_hat^(-1/2) with d_hat_i = sum_j (I + A)_ij.
// Sparsity pattern is the pattern of A plus the full diagonal.
struct RenormalizedLaplacian {
  CsrMatrix m;
};

RenormalizedLaplacian renormalized_laplacian(const SparseGraph& g);

// L = D - A.
CsrMatrix unnormalized_laplacian(const SparseGraph& g);

struct Dataset {
  SparseGraph graph;
  FeatureMatrix features;
  std::vector<int> labels;           // dense in [0, num_classes)
  int num_classes = 0;
  std::vector<std::string> node_ids;  // original ids, row order
};

enum class DatasetFormat { kContentCites, kCsvTriple };

struct LoadOptions {
  // Edge referencing an unknown node id: error (default) or skip with a
  // warning. Public citation dumps are known to contain dangling edges.
  bool skip_dangling = false;
  // Edge weights are binarized to 1 by default.
  bool keep_edge_weights = false;
};

// content-cites: node_file = `id f1..fd label` (whitespace separated),
//   edge_file = `cited citing`.
// csv-triple: node_file = nodes.csv `id,f0..f{d-1}`, edge_file =
//   edges.csv `src,dst[,weight]`, plus labels.csv `id,label` located next
//   to nodes.csv. All three have a header row.
// Node ids are remapped to [0, n) in file order; edges are symmetrized,
// duplicates collapsed, self-loops dropped; labels become dense integers
// in first-appearance order. For duplicate node ids the last occurrence
// wins.
Dataset load_dataset(const std::string& node_file, const std::string& edge_file,
                     DatasetFormat format, const LoadOptions& opts = {});

// Two concentric rings (radii 1 and 2, uniform angles, Gaussian radial
// noise 0.05). Every same-ring pair is connected independently with
// probability p_intra; there are no cross-ring edges.
Dataset gen_two_rings(int n_per_ring, double p_intra, std::uint64_t seed);

// Writes a dataset in csv-triple layout (nodes.csv / edges.csv /
// labels.csv) under dir.
void write_csv_triple(const Dataset& ds, const std::string& dir);

}  // namespace egae
