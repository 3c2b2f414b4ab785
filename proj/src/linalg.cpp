#include "egae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "egae/rng.hpp"

namespace egae {

namespace {

double max_offdiag(const DenseMatrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// Flip each column so its largest-magnitude entry is positive; ties go to
// the lowest row index.
void fix_column_signs(DenseMatrix& p) {
  for (int j = 0; j < p.cols(); ++j) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < p.rows(); ++i) {
      const double a = std::abs(p(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (p(arg, j) < 0.0) p.col(j) *= -1.0;
  }
}

// Two-pass modified Gram-Schmidt on column j against columns [0, j).
// Returns the post-orthogonalization norm.
double orthogonalize_column(DenseMatrix& p, int j) {
  for (int pass = 0; pass < 2; ++pass)
    for (int k = 0; k < j; ++k) p.col(j) -= p.col(k).dot(p.col(j)) * p.col(k);
  return p.col(j).norm();
}

}  // namespace

SymEig jacobi_sym_eig(const DenseMatrix& m, double tol, int max_sweeps) {
  if (m.rows() != m.cols()) throw std::invalid_argument("jacobi_sym_eig: matrix not square");
  const int n = static_cast<int>(m.rows());
  DenseMatrix a = (m + m.transpose()) * 0.5;
  DenseMatrix v = DenseMatrix::Identity(n, n);
  const double threshold = tol * std::max(a.norm(), 1e-300);

  for (int sweep = 0; sweep < max_sweeps && max_offdiag(a) > threshold; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= threshold * 1e-2) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) < a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    out.vectors.col(j) = v.col(order[j]);
  }
  return out;
}

TruncatedSvd truncated_left_singular(const DenseMatrix& m, int c, double sv_threshold) {
  const int n = static_cast<int>(m.rows());
  const int k = static_cast<int>(m.cols());
  if (c < 1 || c > std::min(n, k))
    throw std::invalid_argument("truncated_left_singular: c out of range");
  if (!m.allFinite()) throw std::invalid_argument("truncated_left_singular: non-finite input");

  const DenseMatrix gram = m.transpose() * m;  // k x k
  const SymEig eig = jacobi_sym_eig(gram);

  TruncatedSvd out;
  out.p = DenseMatrix::Zero(n, c);
  for (int j = 0; j < c; ++j) {
    const double lambda = eig.values[k - 1 - j];
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    if (sigma <= sv_threshold) break;
    out.p.col(j) = m * eig.vectors.col(k - 1 - j) / sigma;
    ++out.rank;
  }
  out.rank_deficient = out.rank < c;

  // Re-orthonormalize: the Gram route loses accuracy on small singular
  // values, and deficient columns need an orthonormal completion.
  int basis_cursor = 0;
  for (int j = 0; j < c; ++j) {
    double norm = (j < out.rank) ? orthogonalize_column(out.p, j) : 0.0;
    while (norm < 1e-8) {
      if (basis_cursor >= n)
        throw std::runtime_error("truncated_left_singular: completion failed");
      out.p.col(j).setZero();
      out.p(basis_cursor++, j) = 1.0;
      norm = orthogonalize_column(out.p, j);
    }
    out.p.col(j) /= norm;
  }
  fix_column_signs(out.p);
  return out;
}

DenseMatrix sym_eig_smallest(const DenseMatrix& m, int c, double symmetry_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("sym_eig_smallest: matrix not square");
  if (c < 1 || c > m.rows()) throw std::invalid_argument("sym_eig_smallest: c out of range");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_tol)
    throw std::invalid_argument("sym_eig_smallest: input not symmetric");

  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver((m + m.transpose()) * 0.5);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eig_smallest: eigensolver failed");
  DenseMatrix p = solver.eigenvectors().leftCols(c);
  fix_column_signs(p);
  return p;
}

RowNormalized row_normalize(const DenseMatrix& m, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("row_normalize: eps must be positive");
  RowNormalized out;
  out.m = m;
  for (int i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm < eps) {
      out.m.row(i).setZero();
      ++out.degenerate_rows;
    } else {
      out.m.row(i) /= norm;
    }
  }
  return out;
}

namespace {

struct LloydRun {
  Assignment assignment;
  Centroids centroids;
};

int nearest_centroid(const DenseMatrix& x, const Centroids& f, int i) {
  int best = 0;
  double best_d = (x.row(i) - f.row(0)).squaredNorm();
  for (int j = 1; j < f.rows(); ++j) {
    const double d = (x.row(i) - f.row(j)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Centroids kmeans_pp_init(const DenseMatrix& x, int c, Rng& rng) {
  const int n = static_cast<int>(x.rows());
  Centroids f(c, x.cols());
  f.row(0) = x.row(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Vector d2(n);
  for (int i = 0; i < n; ++i) d2[i] = (x.row(i) - f.row(0)).squaredNorm();
  for (int j = 1; j < c; ++j) {
    const double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    f.row(j) = x.row(pick);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (x.row(i) - f.row(j)).squaredNorm());
  }
  return f;
}

LloydRun lloyd(const DenseMatrix& x, int c, int max_iter, double tol, Rng& rng) {
  const int n = static_cast<int>(x.rows());
  LloydRun run;
  run.centroids = kmeans_pp_init(x, c, rng);
  run.assignment.labels.assign(n, 0);

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      run.assignment.labels[i] = nearest_centroid(x, run.centroids, i);
      inertia += (x.row(i) - run.centroids.row(run.assignment.labels[i])).squaredNorm();
    }
#ifndef NDEBUG
    if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-12)
      throw std::logic_error("kmeans: inertia increased");
#endif
    run.assignment.inertia = inertia;
    if (prev_inertia - inertia <= tol * std::max(prev_inertia, 1e-300) &&
        std::isfinite(prev_inertia))
      break;
    prev_inertia = inertia;

    Centroids next = Centroids::Zero(c, x.cols());
    std::vector<int> counts(c, 0);
    for (int i = 0; i < n; ++i) {
      next.row(run.assignment.labels[i]) += x.row(i);
      ++counts[run.assignment.labels[i]];
    }
    for (int j = 0; j < c; ++j) {
      if (counts[j] > 0) {
        next.row(j) /= counts[j];
        continue;
      }
      // re-seed at the point farthest from its own centroid
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = (x.row(i) - run.centroids.row(run.assignment.labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next.row(j) = x.row(far);
    }
    run.centroids = next;
  }

  run.assignment.degenerate = false;
  std::vector<bool> seen(c, false);
  for (int lbl : run.assignment.labels) seen[lbl] = true;
  for (int j = 0; j < c; ++j)
    if (!seen[j]) run.assignment.degenerate = true;
  return run;
}

}  // namespace

KmeansResult kmeans(const DenseMatrix& x, int c, const KmeansOpts& opts) {
  const int n = static_cast<int>(x.rows());
  if (c < 1 || c > n) throw std::invalid_argument("kmeans: c out of range");
  if (opts.restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  KmeansResult best;
  best.assignment.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(r)));
    LloydRun run = lloyd(x, c, opts.max_iter, opts.tol, rng);
    if (run.assignment.inertia < best.assignment.inertia) {
      best.assignment = std::move(run.assignment);
      best.centroids = std::move(run.centroids);
    }
  }
  return best;
}

}  // namespace egae
