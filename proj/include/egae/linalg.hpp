#pragma once

#include <cstdint>
#include <vector>

#include "egae/csr.hpp"
#include "egae/dense.hpp"

namespace egae {

struct SymEig {
  Vector values;        // ascending
  DenseMatrix vectors;  // column i pairs with values[i]
};

// Cyclic Jacobi for small symmetric matrices (Gram matrices, theorem
// fixtures). Sweeps until max off-diagonal magnitude drops below
// tol * frobenius_norm(m).
SymEig jacobi_sym_eig(const DenseMatrix& m, double tol = 1e-12, int max_sweeps = 100);

struct TruncatedSvd {
  DenseMatrix p;  // n x c, orthonormal columns
  int rank = 0;   // singular values above threshold
  bool rank_deficient = false;
};

// Leading c left singular vectors of m via eigendecomposition of the
// small Gram matrix m^T m, P = m V S^-1. Columns falling below the
// singular-value threshold are replaced by an orthonormal completion and
// the result is flagged rank deficient. Each column is sign-fixed so its
// largest-magnitude entry is positive.
TruncatedSvd truncated_left_singular(const DenseMatrix& m, int c, double sv_threshold = 1e-12);

// Orthonormal basis of the c smallest-eigenvalue eigenspace of a symmetric
// matrix. Rejects inputs with |m - m^T| above symmetry_tol.
DenseMatrix sym_eig_smallest(const DenseMatrix& m, int c, double symmetry_tol = 1e-10);

struct RowNormalized {
  DenseMatrix m;
  int degenerate_rows = 0;  // rows with norm < eps, returned as all-zero
};

RowNormalized row_normalize(const DenseMatrix& m, double eps = 1e-12);

struct Assignment {
  std::vector<int> labels;
  double inertia = 0.0;
  bool degenerate = false;  // some cluster ended up empty
};

using Centroids = DenseMatrix;  // c x dim

struct KmeansOpts {
  int restarts = 20;
  int max_iter = 300;
  double tol = 1e-6;  // relative inertia improvement
  std::uint64_t seed = 0;
};

struct KmeansResult {
  Assignment assignment;
  Centroids centroids;
};

// Lloyd iterations from k-means++ seeding; min-inertia reduction over
// restarts with ties broken by lowest restart index. Empty clusters are
// re-seeded at the point farthest from its current centroid.
KmeansResult kmeans(const DenseMatrix& x, int c, const KmeansOpts& opts = {});

}  // namespace egae
