#include "egae/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "egae/rng.hpp"

namespace egae {

RelaxedKmeansResult relaxed_kmeans(const Embedding& z, int c, const KmeansOpts& opts) {
  const int n = static_cast<int>(z.z.rows());
  if (c < 1 || c > n) throw std::invalid_argument("relaxed_kmeans: c out of range");

  const TruncatedSvd svd = truncated_left_singular(z.z, c);
  const RowNormalized rows = row_normalize(svd.p);

  RelaxedKmeansResult out;
  out.indicator.p = svd.p;
  out.indicator.rank_deficient = svd.rank_deficient;

  if (rows.degenerate_rows == 0) {
    KmeansResult km = kmeans(rows.m, c, opts);
    out.assignment = std::move(km.assignment);
    return out;
  }

  // zero rows join their nearest centroid after k-means converges
  std::vector<int> live;
  live.reserve(n);
  for (int i = 0; i < n; ++i)
    if (rows.m.row(i).norm() > 0.0) live.push_back(i);
  if (live.empty()) throw std::runtime_error("relaxed_kmeans: all indicator rows degenerate");
  if (static_cast<int>(live.size()) < c)
    throw std::runtime_error("relaxed_kmeans: fewer live rows than clusters");

  DenseMatrix sub(static_cast<int>(live.size()), c);
  for (std::size_t k = 0; k < live.size(); ++k) sub.row(static_cast<int>(k)) = rows.m.row(live[k]);
  KmeansResult km = kmeans(sub, c, opts);

  out.assignment.labels.assign(n, -1);
  out.assignment.inertia = km.assignment.inertia;
  out.assignment.degenerate = km.assignment.degenerate;
  for (std::size_t k = 0; k < live.size(); ++k)
    out.assignment.labels[live[k]] = km.assignment.labels[k];
  for (int i = 0; i < n; ++i) {
    if (out.assignment.labels[i] >= 0) continue;
    int best = 0;
    double best_d = (rows.m.row(i) - km.centroids.row(0)).squaredNorm();
    for (int j = 1; j < c; ++j) {
      const double d = (rows.m.row(i) - km.centroids.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out.assignment.labels[i] = best;
    out.assignment.inertia += best_d;
  }
  return out;
}

Indicator rectified_indicator(const Embedding& z, const CsrMatrix& lap_unnorm, double beta,
                              int c) {
  if (beta < 0.0) throw std::invalid_argument("rectified_indicator: beta must be >= 0");
  const int n = static_cast<int>(z.z.rows());
  if (lap_unnorm.rows != n || lap_unnorm.cols != n)
    throw std::invalid_argument("rectified_indicator: Laplacian dimension mismatch");

  if (beta == 0.0) {
    const TruncatedSvd svd = truncated_left_singular(z.z, c);
    return Indicator{svd.p, svd.rank_deficient};
  }

  if (n > 5000)
    throw std::invalid_argument("rectified_indicator: dense path limited to n <= 5000");
  DenseMatrix b = beta * lap_unnorm.to_dense();
  b.noalias() -= z.z * z.z.transpose();
  b = ((b + b.transpose()) * 0.5).eval();
  return Indicator{sym_eig_smallest(b, c), false};
}

EigGapInstance make_eiggap_instance(const std::vector<int>& sizes, double epsilon,
                                    std::uint64_t seed) {
  if (epsilon < 1.0) throw std::invalid_argument("make_eiggap_instance: epsilon must be >= 1");
  EigGapInstance inst;
  inst.sizes = sizes;
  inst.epsilon = epsilon;
  Rng rng(mix_seed(seed, 0xe16));
  const double base = 1.0 / epsilon;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const int k = sizes[b];
    if (k < 1) throw std::invalid_argument("make_eiggap_instance: block size must be >= 1");
    // unit vectors w_i with non-negative entries; block entry is
    // 1/eps + (1 - 1/eps) w_i . w_j, a Gram matrix with unit diagonal
    DenseMatrix w(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) w(i, j) = rng.uniform();
      w.row(i) /= w.row(i).norm();
    }
    DenseMatrix q = base * DenseMatrix::Ones(k, k) + (1.0 - base) * (w * w.transpose());
    q.diagonal().setOnes();
    inst.blocks.push_back(std::move(q));
  }
  return inst;
}

double eiggap_epsilon_bound(const std::vector<int>& sizes) {
  const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
  if (*mx <= 2) return std::numeric_limits<double>::infinity();
  return static_cast<double>(*mn) / static_cast<double>(*mx - 2) + 1.0;
}

bool check_eigengap(const EigGapInstance& inst) {
  double min_lambda1 = std::numeric_limits<double>::infinity();
  double max_lambda2 = -std::numeric_limits<double>::infinity();
  for (const auto& q : inst.blocks) {
    const SymEig eig = jacobi_sym_eig(q);
    const int k = static_cast<int>(eig.values.size());
    min_lambda1 = std::min(min_lambda1, eig.values[k - 1]);
    if (k >= 2) max_lambda2 = std::max(max_lambda2, eig.values[k - 2]);
  }
  return min_lambda1 > max_lambda2;
}

NormCutReport normalized_cut_equivalence_test(const Embedding& z, int c, double perp_tol) {
  const int n = static_cast<int>(z.z.rows());
  if (c < 1 || c > std::min<int>(n, static_cast<int>(z.z.cols())))
    throw std::invalid_argument("normalized_cut_equivalence_test: c out of range");

  NormCutReport report;
  const Vector mu = z.z.colwise().mean().transpose();
  const DenseMatrix centered = z.z.rowwise() - mu.transpose();
  report.perp_residual = (centered * mu).cwiseAbs().maxCoeff();
  report.hypothesis_holds = report.perp_residual <= perp_tol;

  // D = diag(Z Z^T 1) = n diag(Z mu); mu = 0 collapses D and is treated as
  // the perpendicular case with D = I
  Vector d = static_cast<double>(n) * (z.z * mu);
  DenseMatrix scaled;
  if (mu.norm() <= 1e-12) {
    report.perp_residual = 0.0;
    report.hypothesis_holds = true;
    scaled = z.z;
  } else {
    scaled.resize(n, z.z.cols());
    for (int i = 0; i < n; ++i) {
      if (d[i] > 1e-15)
        scaled.row(i) = z.z.row(i) / std::sqrt(d[i]);
      else
        scaled.row(i).setZero();
    }
  }

  // top-c of Z Z^T vs top-c of D^-1/2 Z Z^T D^-1/2, both via left singular
  // subspaces; |P1 P1^T - P2 P2^T|_F^2 = 2c - 2 |P1^T P2|_F^2
  const DenseMatrix p1 = truncated_left_singular(z.z, c).p;
  const DenseMatrix p2 = truncated_left_singular(scaled, c).p;
  const double cross = (p1.transpose() * p2).squaredNorm();
  report.projector_distance = std::sqrt(std::max(0.0, 2.0 * c - 2.0 * cross));
  return report;
}

}  // namespace egae
