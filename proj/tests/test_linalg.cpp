#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "egae/linalg.hpp"
#include "egae/rng.hpp"

using egae::DenseMatrix;
using egae::Vector;

namespace {

DenseMatrix random_matrix(int n, int k, egae::Rng& rng, double lo = -1.0, double hi = 1.0) {
  DenseMatrix m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

double orthonormality_error(const DenseMatrix& p) {
  return (p.transpose() * p - DenseMatrix::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("jacobi matches Eigen on random symmetric matrices") {
  egae::Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(20));
    DenseMatrix a = random_matrix(n, n, rng);
    a = ((a + a.transpose()) * 0.5).eval();
    const egae::SymEig eig = egae::jacobi_sym_eig(a);

    Eigen::SelfAdjointEigenSolver<DenseMatrix> oracle(a);
    CHECK((eig.values - oracle.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(orthonormality_error(eig.vectors) < 1e-12);
    // residual A v = lambda v
    const DenseMatrix resid = a * eig.vectors - eig.vectors * eig.values.asDiagonal();
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("truncated_left_singular on diag(2,1)") {
  DenseMatrix m(2, 2);
  m << 2, 0, 0, 1;
  const auto svd = egae::truncated_left_singular(m, 1);
  CHECK(svd.rank == 1);
  CHECK_FALSE(svd.rank_deficient);
  CHECK(svd.p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(svd.p(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("truncated_left_singular with orthonormal columns recovers the projector") {
  egae::Rng rng(5);
  DenseMatrix m = random_matrix(10, 4, rng);
  // orthonormalize columns
  for (int j = 0; j < m.cols(); ++j) {
    for (int k = 0; k < j; ++k) m.col(j) -= m.col(k).dot(m.col(j)) * m.col(k);
    m.col(j).normalize();
  }
  const auto svd = egae::truncated_left_singular(m, 4);
  const DenseMatrix proj_p = svd.p * svd.p.transpose();
  const DenseMatrix proj_m = m * m.transpose();
  CHECK((proj_p - proj_m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("truncated_left_singular captures top-c energy (dense SVD oracle)") {
  egae::Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(39));
    const int k = 2 + static_cast<int>(rng.uniform_index(10));
    const int c = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(std::min(n, k))));
    const DenseMatrix m = random_matrix(n, k, rng);
    const auto svd = egae::truncated_left_singular(m, c);
    CHECK(orthonormality_error(svd.p) < 1e-8);

    Eigen::JacobiSVD<Eigen::MatrixXd> oracle(m);
    double want = 0.0;
    for (int i = 0; i < c; ++i) {
      const double s = oracle.singularValues()[i];
      want += s * s;
    }
    const double got = (m.transpose() * svd.p).squaredNorm();  // tr(P^T m m^T P)
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("truncated_left_singular pads rank-deficient input") {
  DenseMatrix m(4, 3);
  m.setZero();
  m.col(0) = Vector::Ones(4);  // rank 1
  const auto svd = egae::truncated_left_singular(m, 3);
  CHECK(svd.rank == 1);
  CHECK(svd.rank_deficient);
  CHECK(orthonormality_error(svd.p) < 1e-10);
}

TEST_CASE("truncated_left_singular block-diagonal rows are constant per block") {
  // two orthogonal blocks: rows of the normalized indicator agree within
  // each block
  egae::Rng rng(17);
  DenseMatrix z = DenseMatrix::Zero(9, 6);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) z(i, j) = 0.2 + rng.uniform();
  for (int i = 5; i < 9; ++i)
    for (int j = 3; j < 6; ++j) z(i, j) = 0.2 + rng.uniform();
  const auto svd = egae::truncated_left_singular(z, 2);
  const auto rows = egae::row_normalize(svd.p);
  REQUIRE(rows.degenerate_rows == 0);
  for (int i = 1; i < 5; ++i)
    CHECK((rows.m.row(i) - rows.m.row(0)).norm() < 1e-8);
  for (int i = 6; i < 9; ++i)
    CHECK((rows.m.row(i) - rows.m.row(5)).norm() < 1e-8);
  CHECK((rows.m.row(0) - rows.m.row(5)).norm() > 0.5);
}

TEST_CASE("sym_eig_smallest basics") {
  DenseMatrix d = DenseMatrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const DenseMatrix p = egae::sym_eig_smallest(d, 1);
  CHECK(std::abs(p(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(1, 0) > 0.0);  // sign convention

  const DenseMatrix pair = egae::sym_eig_smallest(DenseMatrix::Identity(4, 4), 2);
  CHECK(orthonormality_error(pair) < 1e-12);

  DenseMatrix asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(egae::sym_eig_smallest(asym, 1), std::invalid_argument);
}

TEST_CASE("sym_eig_smallest finds the Laplacian kernel") {
  // path graph 0-1-2-3: L = D - A, kernel is the constant vector
  DenseMatrix l(4, 4);
  l << 1, -1, 0, 0, -1, 2, -1, 0, 0, -1, 2, -1, 0, 0, -1, 1;
  const DenseMatrix p = egae::sym_eig_smallest(l, 1);
  for (int i = 0; i < 4; ++i) CHECK(p(i, 0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("row_normalize") {
  DenseMatrix m(1, 2);
  m << 3, 4;
  auto out = egae::row_normalize(m);
  CHECK(out.m(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out.m(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(out.degenerate_rows == 0);

  DenseMatrix z = DenseMatrix::Zero(2, 3);
  z.row(0) << 1, 0, 0;
  out = egae::row_normalize(z);
  CHECK(out.degenerate_rows == 1);
  CHECK(out.m.row(1).norm() == 0.0);

  egae::Rng rng(3);
  DenseMatrix r = random_matrix(20, 5, rng);
  const auto unit = egae::row_normalize(r);
  const auto again = egae::row_normalize(unit.m);
  CHECK((again.m - unit.m).cwiseAbs().maxCoeff() < 1e-15);
  for (int i = 0; i < r.rows(); ++i) {
    const double norm = again.m.row(i).norm();
    CHECK((norm == 0.0 || std::abs(norm - 1.0) < 1e-12));
  }
  CHECK_THROWS_AS(egae::row_normalize(r, 0.0), std::invalid_argument);
}

TEST_CASE("kmeans separates two far pairs") {
  DenseMatrix x(4, 2);
  x << 0, 0, 0, 0.1, 10, 10, 10, 10.1;
  egae::KmeansOpts opts;
  opts.restarts = 1;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    opts.seed = seed;
    const auto res = egae::kmeans(x, 2, opts);
    CHECK(res.assignment.labels[0] == res.assignment.labels[1]);
    CHECK(res.assignment.labels[2] == res.assignment.labels[3]);
    CHECK(res.assignment.labels[0] != res.assignment.labels[2]);
  }
}

TEST_CASE("kmeans c=1 returns the mean") {
  egae::Rng rng(11);
  const DenseMatrix x = random_matrix(30, 3, rng);
  const auto res = egae::kmeans(x, 1, {});
  const Vector mean = x.colwise().mean().transpose();
  CHECK((res.centroids.row(0).transpose() - mean).norm() < 1e-12);
  double want = 0.0;
  for (int i = 0; i < x.rows(); ++i) want += (x.row(i).transpose() - mean).squaredNorm();
  CHECK(res.assignment.inertia == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("kmeans c=n gives zero inertia") {
  egae::Rng rng(13);
  const DenseMatrix x = random_matrix(8, 2, rng);
  const auto res = egae::kmeans(x, 8, {});
  CHECK(res.assignment.inertia == doctest::Approx(0.0).epsilon(1e-20));
  std::vector<bool> used(8, false);
  for (int lbl : res.assignment.labels) used[lbl] = true;
  for (bool u : used) CHECK(u);
}

TEST_CASE("kmeans is deterministic per seed") {
  egae::Rng rng(21);
  const DenseMatrix x = random_matrix(50, 4, rng);
  egae::KmeansOpts opts;
  opts.seed = 777;
  const auto a = egae::kmeans(x, 5, opts);
  const auto b = egae::kmeans(x, 5, opts);
  CHECK(a.assignment.labels == b.assignment.labels);
  CHECK(a.assignment.inertia == b.assignment.inertia);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("kmeans flags unfillable clusters as degenerate") {
  DenseMatrix x(6, 2);
  x << 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1;  // two distinct points, c = 3
  const auto res = egae::kmeans(x, 3, {});
  CHECK(res.assignment.degenerate);
  for (int lbl : res.assignment.labels) {
    CHECK(lbl >= 0);
    CHECK(lbl < 3);
  }
}
