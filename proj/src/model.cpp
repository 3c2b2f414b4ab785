#include "egae/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "egae/errors.hpp"
#include "egae/linalg.hpp"
#include "egae/rng.hpp"

namespace egae {

namespace {

constexpr double kProbClamp = 1e-10;
constexpr double kNormEps = 1e-12;

void fill_glorot(DenseMatrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
}

void check_orthonormal(const DenseMatrix& p) {
  const DenseMatrix gram = p.transpose() * p;
  const double dev = (gram - DenseMatrix::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-6)
    throw std::invalid_argument("clustering_loss: indicator not orthonormal (deviation " +
                                std::to_string(dev) + ")");
}

struct ForwardCache {
  DenseMatrix h1pre, h1;    // n x hidden
  DenseMatrix u;            // L_hat h1, n x hidden
  DenseMatrix h2pre, h2;    // n x embed
  Vector row_norms;         // |h2 row|
  Embedding z;
};

// Reconstruction loss; optionally accumulates dJ_r/dZ. Processes Z Z^T in
// row blocks so no n x n matrix is ever held.
double recon_loss_grad(const DenseMatrix& z, const SparseGraph& g, DenseMatrix* dz) {
  const int n = static_cast<int>(z.rows());
  if (g.n != n) throw std::invalid_argument("reconstruction_loss: dimension mismatch");
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double n_pos = static_cast<double>(g.adj.nnz() + n);
  const double n_neg = n2 - n_pos;
  const double w0 = n_neg > 0.0 ? n_pos / n_neg : 0.0;
  const double lo = kProbClamp, hi = 1.0 - kProbClamp;

  if (dz) dz->setZero(n, z.cols());
  double loss = 0.0;
  const int block = 256;
  DenseMatrix s_blk, g_blk;
  for (int r0 = 0; r0 < n; r0 += block) {
    const int b = std::min(block, n - r0);
    s_blk.noalias() = z.middleRows(r0, b) * z.transpose();
    auto s = s_blk.array();

    // all entries as negatives, then correct the positive cells
    auto a = s.min(hi).max(lo);
    loss += w0 * -((-a).log1p().sum());
    if (dz) g_blk = (s > lo && s < hi).select(w0 / (1.0 - a), DenseMatrix::Zero(b, n));

    auto correct = [&](int li, int j) {
      const double sv = s_blk(li, j);
      const double av = std::min(std::max(sv, lo), hi);
      loss -= w0 * -std::log1p(-av);
      loss += -std::log(av);
      if (dz) g_blk(li, j) = (sv > lo && sv < hi) ? -1.0 / av : 0.0;
    };
    for (int li = 0; li < b; ++li) {
      const int i = r0 + li;
      correct(li, i);  // diagonal target is 1
      for (std::int64_t k = g.adj.row_ptr[i]; k < g.adj.row_ptr[i + 1]; ++k)
        correct(li, g.adj.col_idx[static_cast<std::size_t>(k)]);
    }
    if (dz) dz->middleRows(r0, b).noalias() = g_blk * z;
  }
  if (dz) *dz *= 2.0 / n2;
  return loss / n2;
}

double l1_norm(const DenseMatrix& w) { return w.cwiseAbs().sum(); }

DenseMatrix sign_of(const DenseMatrix& w) {
  return w.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

EncoderParams init_params(int in_dim, int hidden_dim, int embed_dim, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1 || embed_dim < 1)
    throw std::invalid_argument("init_params: dimensions must be positive");
  EncoderParams p;
  p.in_dim = in_dim;
  p.hidden_dim = hidden_dim;
  p.embed_dim = embed_dim;
  p.seed = seed;
  p.w1.resize(in_dim, hidden_dim);
  p.w2.resize(hidden_dim, embed_dim);
  Rng rng(mix_seed(seed, 0x517));
  fill_glorot(p.w1, rng);
  fill_glorot(p.w2, rng);
  return p;
}

Evaluator::Evaluator(const RenormalizedLaplacian& lap, const FeatureMatrix& x)
    : lap_(lap.m), in_dim_(static_cast<int>(x.cols())) {
  if (lap_.cols != x.rows()) throw std::invalid_argument("evaluator: dimension mismatch");
  const DenseMatrix dense_lx = spmm(lap_, x);
  std::vector<std::tuple<int, int, double>> triplets;
  for (int i = 0; i < dense_lx.rows(); ++i)
    for (int j = 0; j < dense_lx.cols(); ++j)
      if (dense_lx(i, j) != 0.0) triplets.emplace_back(i, j, dense_lx(i, j));
  lx_ = CsrMatrix::from_triplets(static_cast<int>(dense_lx.rows()),
                                 static_cast<int>(dense_lx.cols()), std::move(triplets));
}

namespace {

ForwardCache forward_pass(const CsrMatrix& lap, const CsrMatrix& lx, const EncoderParams& p) {
  ForwardCache c;
  c.h1pre = spmm(lx, p.w1);
  if (!c.h1pre.allFinite()) throw NumericalError("encode: non-finite values at layer 1");
  c.h1 = c.h1pre.cwiseMax(0.0);
  c.u = spmm(lap, c.h1);
  c.h2pre.noalias() = c.u * p.w2;
  if (!c.h2pre.allFinite()) throw NumericalError("encode: non-finite values at layer 2");
  c.h2 = c.h2pre.cwiseMax(0.0);

  const int n = static_cast<int>(c.h2.rows());
  c.row_norms.resize(n);
  c.z.z.resize(n, c.h2.cols());
  c.z.degenerate_rows = 0;
  for (int i = 0; i < n; ++i) {
    const double norm = c.h2.row(i).norm();
    c.row_norms[i] = norm;
    if (norm < kNormEps) {
      c.z.z.row(i).setZero();
      ++c.z.degenerate_rows;
    } else {
      c.z.z.row(i) = c.h2.row(i) / norm;
    }
  }
  return c;
}

}  // namespace

Embedding Evaluator::embed(const EncoderParams& params) const {
  if (params.in_dim != in_dim_) throw std::invalid_argument("evaluator: encoder dims mismatch");
  return forward_pass(lap_, lx_, params).z;
}

Evaluator::Result Evaluator::eval(const EncoderParams& params, const SparseGraph& g,
                                  const DenseMatrix* indicator, double alpha, double l1_coeff,
                                  bool want_grad) const {
  if (params.in_dim != in_dim_) throw std::invalid_argument("evaluator: encoder dims mismatch");
  if (alpha != 0.0 && indicator == nullptr)
    throw std::invalid_argument("evaluator: indicator required when alpha != 0");
  if (indicator != nullptr) check_orthonormal(*indicator);

  ForwardCache c = forward_pass(lap_, lx_, params);
  Result out;
  out.report.alpha = alpha;
  out.report.l1_coeff = l1_coeff;
  out.report.l1 = l1_norm(params.w1) + l1_norm(params.w2);

  DenseMatrix dz;
  out.report.j_r = recon_loss_grad(c.z.z, g, want_grad ? &dz : nullptr);
  if (indicator != nullptr) {
    const DenseMatrix ptz = indicator->transpose() * c.z.z;  // c x embed
    out.report.j_c = c.z.z.squaredNorm() - ptz.squaredNorm();
    if (want_grad && alpha != 0.0)
      dz.noalias() += alpha * (2.0 * c.z.z - 2.0 * (*indicator * ptz));
  }
  out.report.total =
      out.report.j_r + alpha * out.report.j_c + l1_coeff * out.report.l1;

  if (want_grad) {
    // through the row normalization: rows with norm < eps carry no gradient
    DenseMatrix dh2(c.h2.rows(), c.h2.cols());
    for (int i = 0; i < c.h2.rows(); ++i) {
      if (c.row_norms[i] < kNormEps) {
        dh2.row(i).setZero();
      } else {
        const double dot = dz.row(i).dot(c.z.z.row(i));
        dh2.row(i) = (dz.row(i) - dot * c.z.z.row(i)) / c.row_norms[i];
      }
    }
    const DenseMatrix dh2pre = (c.h2pre.array() > 0.0).select(dh2, 0.0);
    out.grads.dw2.noalias() = c.u.transpose() * dh2pre;
    out.grads.dw2 += l1_coeff * sign_of(params.w2);

    const DenseMatrix du = dh2pre * params.w2.transpose();
    const DenseMatrix dh1 = spmm(lap_, du);  // L_hat is symmetric
    const DenseMatrix dh1pre = (c.h1pre.array() > 0.0).select(dh1, 0.0);
    out.grads.dw1 = spmm_transposed(lx_, dh1pre);
    out.grads.dw1 += l1_coeff * sign_of(params.w1);
  }
  out.z = std::move(c.z);
  return out;
}

Embedding encode(const EncoderParams& params, const RenormalizedLaplacian& lap,
                 const FeatureMatrix& x) {
  return Evaluator(lap, x).embed(params);
}

double reconstruction_loss(const Embedding& z, const SparseGraph& g) {
  return recon_loss_grad(z.z, g, nullptr);
}

double clustering_loss(const Embedding& z, const DenseMatrix& p) {
  if (p.rows() != z.z.rows()) throw std::invalid_argument("clustering_loss: dimension mismatch");
  check_orthonormal(p);
  const DenseMatrix ztp = z.z.transpose() * p;
  return z.z.squaredNorm() - ztp.squaredNorm();
}

LossReport total_loss(const Embedding& z, const SparseGraph& g, const DenseMatrix* indicator,
                      double alpha, double l1_coeff, const EncoderParams& params) {
  LossReport r;
  r.alpha = alpha;
  r.l1_coeff = l1_coeff;
  r.j_r = reconstruction_loss(z, g);
  r.j_c = indicator != nullptr ? clustering_loss(z, *indicator) : 0.0;
  r.l1 = l1_norm(params.w1) + l1_norm(params.w2);
  r.total = r.j_r + alpha * r.j_c + l1_coeff * r.l1;
  return r;
}

Gradients gradients(const EncoderParams& params, const RenormalizedLaplacian& lap,
                    const FeatureMatrix& x, const SparseGraph& g, const DenseMatrix* indicator,
                    double alpha, double l1_coeff) {
  Evaluator ev(lap, x);
  return ev.eval(params, g, indicator, alpha, l1_coeff, /*want_grad=*/true).grads;
}

namespace {

constexpr char kMagic[8] = {'E', 'G', 'A', 'E', 'P', 'R', 'M', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_matrix(std::ofstream& out, const DenseMatrix& w) {
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) {
      std::uint64_t bits;
      const double v = w(i, j);
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
}

void get_matrix(std::ifstream& in, DenseMatrix& w) {
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) {
      const std::uint64_t bits = get_u64(in);
      double v;
      std::memcpy(&v, &bits, 8);
      w(i, j) = v;
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& params) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    put_u32(out, 1);  // format version
    put_u32(out, static_cast<std::uint32_t>(params.in_dim));
    put_u32(out, static_cast<std::uint32_t>(params.hidden_dim));
    put_u32(out, static_cast<std::uint32_t>(params.embed_dim));
    put_u64(out, params.seed);
    put_matrix(out, params.w1);
    put_matrix(out, params.w2);
    if (!out) throw std::runtime_error("write failed: " + path);
  }
  fs::rename(tmp, path);
}

EncoderParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const std::uint32_t version = get_u32(in);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  EncoderParams p;
  p.in_dim = static_cast<int>(get_u32(in));
  p.hidden_dim = static_cast<int>(get_u32(in));
  p.embed_dim = static_cast<int>(get_u32(in));
  p.seed = get_u64(in);
  if (p.in_dim < 1 || p.hidden_dim < 1 || p.embed_dim < 1)
    throw std::runtime_error("corrupt checkpoint header: " + path);
  p.w1.resize(p.in_dim, p.hidden_dim);
  p.w2.resize(p.hidden_dim, p.embed_dim);
  get_matrix(in, p.w1);
  get_matrix(in, p.w2);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

}  // namespace egae
