#pragma once

#include <cstdint>
#include <vector>

#include "egae/graph.hpp"
#include "egae/linalg.hpp"
#include "egae/model.hpp"

namespace egae {

// Continuous relaxation of the scaled cluster indicator; columns are
// orthonormal.
struct Indicator {
  DenseMatrix p;  // n x c
  bool rank_deficient = false;
};

struct RelaxedKmeansResult {
  Indicator indicator;
  Assignment assignment;
};

// Leading c left singular vectors of Z, rows normalized, then k-means on
// the normalized rows. Rows that normalize to zero (rank-deficient inputs)
// are assigned to their nearest centroid after k-means converges.
RelaxedKmeansResult relaxed_kmeans(const Embedding& z, int c, const KmeansOpts& opts = {});

// Indicator from the adjacency-sharing variant: the c smallest-eigenvalue
// eigenvectors of beta * L - Z Z^T. beta = 0 reduces to the plain relaxed
// k-means subspace. Dense path, practical up to n ~ 5000.
Indicator rectified_indicator(const Embedding& z, const CsrMatrix& lap_unnorm, double beta,
                              int c);

// Block-diagonal Gram fixture for the eigen-gap condition: unit diagonal,
// within-block entries >= 1/epsilon, positive semidefinite by construction.
struct EigGapInstance {
  std::vector<int> sizes;
  double epsilon = 1.0;
  std::vector<DenseMatrix> blocks;
};

EigGapInstance make_eiggap_instance(const std::vector<int>& sizes, double epsilon,
                                    std::uint64_t seed);

// Theorem bound on epsilon for the eigen-gap condition:
// epsilon < |C_min| / (|C_max| - 2) + 1 (infinite when |C_max| <= 2).
double eiggap_epsilon_bound(const std::vector<int>& sizes);

// True when the smallest leading eigenvalue over blocks exceeds the largest
// second eigenvalue over blocks.
bool check_eigengap(const EigGapInstance& inst);

struct NormCutReport {
  double perp_residual = 0.0;      // max |Z_centered mu|
  double projector_distance = 0.0; // between the two top-c subspaces
  bool hypothesis_holds = false;   // residual within tolerance
};

// Compares the relaxed-k-means subspace (top-c of Z Z^T) with the
// normalized-cut subspace (top-c of D^-1/2 Z Z^T D^-1/2, D = diag(Z Z^T 1)).
// The subspaces coincide when the mean embedding is perpendicular to the
// centered data; mu = 0 degenerates D and is treated as the perpendicular
// case with D = I.
NormCutReport normalized_cut_equivalence_test(const Embedding& z, int c,
                                              double perp_tol = 1e-8);

}  // namespace egae
