#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "egae/clustering.hpp"
#include "egae/model.hpp"
#include "test_util.hpp"

using egae::DenseMatrix;
using egae::Embedding;
using egae::EncoderParams;
using egae::SparseGraph;
using egae_test::random_graph;
using egae_test::random_matrix;

namespace {

struct SmallInstance {
  SparseGraph g;
  egae::RenormalizedLaplacian lap;
  DenseMatrix x;
  EncoderParams params;
  DenseMatrix indicator;
};

SmallInstance make_instance(std::uint64_t seed, int n = 12, int d = 6, int h = 8, int out = 5,
                            int c = 3) {
  egae::Rng rng(seed);
  SmallInstance inst;
  inst.g = random_graph(n, 0.35, rng);
  inst.lap = egae::renormalized_laplacian(inst.g);
  inst.x = random_matrix(n, d, rng, -0.5, 1.5);
  inst.params = egae::init_params(d, h, out, seed);
  const Embedding z = egae::encode(inst.params, inst.lap, inst.x);
  inst.indicator = egae::truncated_left_singular(z.z, c).p;
  return inst;
}

DenseMatrix random_orthonormal(int n, int c, egae::Rng& rng) {
  const DenseMatrix m = random_matrix(n, c, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, c);
  return q;
}

}  // namespace

TEST_CASE("init_params is deterministic and Glorot-bounded") {
  const EncoderParams a = egae::init_params(1433, 256, 128, 7);
  const EncoderParams b = egae::init_params(1433, 256, 128, 7);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.w1.rows() == 1433);
  CHECK(a.w1.cols() == 256);
  CHECK(a.w2.rows() == 256);
  CHECK(a.w2.cols() == 128);
  CHECK(a.w1.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (1433 + 256)));
  CHECK(a.w2.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (256 + 128)));
  const EncoderParams other = egae::init_params(1433, 256, 128, 8);
  CHECK(a.w1 != other.w1);
  CHECK_THROWS_AS(egae::init_params(0, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("encode with zero W2 degenerates every row") {
  auto inst = make_instance(3);
  inst.params.w2.setZero();
  const Embedding z = egae::encode(inst.params, inst.lap, inst.x);
  CHECK(z.degenerate_rows == inst.g.n);
  CHECK(z.z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode output is non-negative with unit rows") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto inst = make_instance(seed);
    const Embedding z = egae::encode(inst.params, inst.lap, inst.x);
    CHECK(z.z.minCoeff() >= 0.0);
    for (int i = 0; i < z.z.rows(); ++i) {
      const double norm = z.z.row(i).norm();
      if (norm > 0.0) CHECK(std::abs(norm - 1.0) < 1e-10);
    }
    // Assumption 1 by construction: pairwise inner products stay non-negative
    const DenseMatrix gram = z.z * z.z.transpose();
    CHECK(gram.minCoeff() >= -1e-12);
  }
}

TEST_CASE("encode matches a dense forward oracle on the single-edge graph") {
  const SparseGraph g = SparseGraph::from_edges(2, {{0, 1}});
  const auto lap = egae::renormalized_laplacian(g);
  const DenseMatrix x = DenseMatrix::Identity(2, 2);
  egae::Rng rng(5);
  EncoderParams p;
  p.in_dim = 2;
  p.hidden_dim = 3;
  p.embed_dim = 2;
  p.w1 = random_matrix(2, 3, rng, 0.1, 1.0);  // positive weights keep ReLU transparent
  p.w2 = random_matrix(3, 2, rng, 0.1, 1.0);

  DenseMatrix lhat(2, 2);
  lhat << 0.5, 0.5, 0.5, 0.5;
  const DenseMatrix h1 = (lhat * x * p.w1).cwiseMax(0.0);
  const DenseMatrix h2 = (lhat * h1 * p.w2).cwiseMax(0.0);
  DenseMatrix want = h2;
  for (int i = 0; i < 2; ++i) want.row(i) /= want.row(i).norm();

  const Embedding z = egae::encode(p, lap, x);
  CHECK((z.z - want).cwiseAbs().maxCoeff() < 1e-12);
  // both rows aggregate the same neighborhood here
  CHECK((z.z.row(0) - z.z.row(1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Remark-2 identity: squared distance is 2 - 2 inner product") {
  const auto inst = make_instance(11);
  const Embedding z = egae::encode(inst.params, inst.lap, inst.x);
  for (int i = 0; i < z.z.rows(); ++i)
    for (int j = 0; j < z.z.rows(); ++j) {
      if (z.z.row(i).norm() == 0.0 || z.z.row(j).norm() == 0.0) continue;
      const double lhs = (z.z.row(i) - z.z.row(j)).squaredNorm();
      const double rhs = 2.0 - 2.0 * z.z.row(i).dot(z.z.row(j));
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("reconstruction loss is ~0 when the embedding reproduces the target") {
  // both rows at e1, single edge: reconstructed matrix and target are all ones
  Embedding z;
  z.z = DenseMatrix::Zero(2, 3);
  z.z(0, 0) = 1.0;
  z.z(1, 0) = 1.0;
  const SparseGraph g = SparseGraph::from_edges(2, {{0, 1}});
  CHECK(egae::reconstruction_loss(z, g) < 1e-9);

  // orthogonal rows on the empty graph: target is the identity
  Embedding zi;
  zi.z = DenseMatrix::Identity(2, 2);
  const SparseGraph empty = SparseGraph::from_edges(2, {});
  CHECK(egae::reconstruction_loss(zi, empty) < 1e-9);
}

TEST_CASE("reconstruction loss is invariant under consistent permutation") {
  const auto inst = make_instance(13, 10);
  const Embedding z = egae::encode(inst.params, inst.lap, inst.x);

  // reversal permutation
  const int n = inst.g.n;
  Embedding pz;
  pz.z = DenseMatrix(n, z.z.cols());
  for (int i = 0; i < n; ++i) pz.z.row(i) = z.z.row(n - 1 - i);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (std::int64_t k = inst.g.adj.row_ptr[i]; k < inst.g.adj.row_ptr[i + 1]; ++k) {
      const int j = inst.g.adj.col_idx[static_cast<std::size_t>(k)];
      if (i < j) edges.emplace_back(n - 1 - i, n - 1 - j);
    }
  const SparseGraph pg = SparseGraph::from_edges(n, edges);
  CHECK(egae::reconstruction_loss(pz, pg) ==
        doctest::Approx(egae::reconstruction_loss(z, inst.g)).epsilon(1e-12));
}

TEST_CASE("clustering loss: full span, tail energy, and positivity") {
  egae::Rng rng(19);
  Embedding z;
  z.z = random_matrix(20, 6, rng);

  // c = rank: zero loss
  const DenseMatrix full = egae::truncated_left_singular(z.z, 6).p;
  CHECK(std::abs(egae::clustering_loss(z, full)) < 1e-9);

  // c = 2: tail singular energy against a dense SVD oracle
  const DenseMatrix top2 = egae::truncated_left_singular(z.z, 2).p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(z.z);
  double tail = 0.0;
  for (int i = 2; i < svd.singularValues().size(); ++i)
    tail += svd.singularValues()[i] * svd.singularValues()[i];
  CHECK(egae::clustering_loss(z, top2) == doctest::Approx(tail).epsilon(1e-8));

  // any orthonormal P: non-negative up to round-off
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix p = random_orthonormal(20, 3, rng);
    CHECK(egae::clustering_loss(z, p) >= -1e-9);
  }
}

TEST_CASE("clustering loss is invariant under right rotation of P") {
  egae::Rng rng(23);
  Embedding z;
  z.z = random_matrix(15, 5, rng);
  const DenseMatrix p = egae::truncated_left_singular(z.z, 3).p;
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix r = random_orthonormal(3, 3, rng);
    CHECK(std::abs(egae::clustering_loss(z, p) - egae::clustering_loss(z, (p * r).eval())) <
          1e-9);
  }
}

TEST_CASE("clustering loss rejects non-orthonormal indicators") {
  egae::Rng rng(29);
  Embedding z;
  z.z = random_matrix(10, 4, rng);
  DenseMatrix bad = random_matrix(10, 2, rng);
  CHECK_THROWS_AS(egae::clustering_loss(z, bad), std::invalid_argument);
}

TEST_CASE("total loss composes its parts exactly") {
  const auto inst = make_instance(31);
  const Embedding z = egae::encode(inst.params, inst.lap, inst.x);

  const auto r0 = egae::total_loss(z, inst.g, nullptr, 0.0, 0.0, inst.params);
  CHECK(r0.total == r0.j_r);
  CHECK(r0.j_c == 0.0);
  CHECK(r0.l1 > 0.0);

  const auto r1 = egae::total_loss(z, inst.g, &inst.indicator, 10.0, 1e-3, inst.params);
  CHECK(r1.total == doctest::Approx(r1.j_r + 10.0 * r1.j_c + 1e-3 * r1.l1).epsilon(1e-12));
  CHECK(r1.j_c >= -1e-9);
}

TEST_CASE("analytic gradients match central finite differences") {
  // three seeded instances, step 1e-5; coordinates with |w| near the L1
  // kink or negligible analytic gradient are skipped
  const double step = 1e-5;
  const double alpha = 0.7;
  const double l1_coeff = 1e-3;
  for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
    auto inst = make_instance(seed);
    const egae::Gradients grads = egae::gradients(inst.params, inst.lap, inst.x, inst.g,
                                                  &inst.indicator, alpha, l1_coeff);

    auto loss_at = [&](const EncoderParams& p) {
      const Embedding z = egae::encode(p, inst.lap, inst.x);
      return egae::total_loss(z, inst.g, &inst.indicator, alpha, l1_coeff, p).total;
    };

    double max_rel = 0.0;
    int checked = 0;
    auto check_matrix = [&](DenseMatrix EncoderParams::*field, const DenseMatrix& analytic) {
      EncoderParams p = inst.params;
      DenseMatrix& w = p.*field;
      for (int i = 0; i < w.rows(); ++i)
        for (int j = 0; j < w.cols(); ++j) {
          if (std::abs(analytic(i, j)) <= 1e-8) continue;
          if (std::abs(w(i, j)) < 1e-4) continue;  // L1 kink within the stencil
          const double orig = w(i, j);
          w(i, j) = orig + step;
          const double up = loss_at(p);
          w(i, j) = orig - step;
          const double down = loss_at(p);
          w(i, j) = orig;
          const double fd = (up - down) / (2.0 * step);
          const double rel =
              std::abs(fd - analytic(i, j)) / std::max(std::abs(analytic(i, j)), std::abs(fd));
          max_rel = std::max(max_rel, rel);
          ++checked;
        }
    };
    check_matrix(&EncoderParams::w1, grads.dw1);
    check_matrix(&EncoderParams::w2, grads.dw2);
    CHECK(checked > 50);
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("gradient is additive in alpha") {
  auto inst = make_instance(41);
  const auto g0 = egae::gradients(inst.params, inst.lap, inst.x, inst.g, &inst.indicator, 0.0, 0.0);
  const auto g1 = egae::gradients(inst.params, inst.lap, inst.x, inst.g, &inst.indicator, 1.0, 0.0);
  const auto g2 = egae::gradients(inst.params, inst.lap, inst.x, inst.g, &inst.indicator, 2.0, 0.0);
  const DenseMatrix lhs = g2.dw1 - g0.dw1;
  const DenseMatrix rhs = 2.0 * (g1.dw1 - g0.dw1);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);

  // alpha 0 equals the reconstruction-only gradient
  const auto gr = egae::gradients(inst.params, inst.lap, inst.x, inst.g, nullptr, 0.0, 0.0);
  CHECK((g0.dw1 - gr.dw1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g0.dw2 - gr.dw2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate rows contribute no gradient through normalization") {
  auto inst = make_instance(43);
  inst.params.w2.setZero();  // every embedding row dies
  const auto g = egae::gradients(inst.params, inst.lap, inst.x, inst.g, nullptr, 0.0, 1e-3);
  CHECK(g.dw2.cwiseAbs().maxCoeff() == 0.0);  // sign(0) = 0 kills the L1 part too
  const DenseMatrix want_dw1 = 1e-3 * inst.params.w1.unaryExpr([](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
  CHECK((g.dw1 - want_dw1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() /
                        ("egae_ckpt_" + std::to_string(::getpid()) + ".bin");
  const EncoderParams p = egae::init_params(7, 5, 3, 99);
  egae::save_checkpoint(path.string(), p);
  const EncoderParams q = egae::load_checkpoint(path.string());
  CHECK(q.in_dim == 7);
  CHECK(q.hidden_dim == 5);
  CHECK(q.embed_dim == 3);
  CHECK(q.seed == 99);
  CHECK(p.w1 == q.w1);
  CHECK(p.w2 == q.w2);
  fs::remove(path);

  CHECK_THROWS(egae::load_checkpoint("/nonexistent/ckpt.bin"));
  const fs::path junk = fs::temp_directory_path() / "egae_junk.bin";
  {
    std::ofstream out(junk, std::ios::binary);
    out << "definitely not a checkpoint";
  }
  CHECK_THROWS(egae::load_checkpoint(junk.string()));
  fs::remove(junk);
}
