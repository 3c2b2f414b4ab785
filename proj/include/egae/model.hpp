#pragma once

#include <cstdint>
#include <string>

#include "egae/graph.hpp"

namespace egae {

struct EncoderParams {
  DenseMatrix w1;  // in_dim x hidden_dim
  DenseMatrix w2;  // hidden_dim x embed_dim
  int in_dim = 0;
  int hidden_dim = 0;
  int embed_dim = 0;
  std::uint64_t seed = 0;
};

// Glorot-uniform initialization, deterministic per seed.
EncoderParams init_params(int in_dim, int hidden_dim, int embed_dim, std::uint64_t seed);

// Non-negative rows on the unit hypersphere; rows that die under ReLU are
// returned as all-zero and counted.
struct Embedding {
  DenseMatrix z;  // n x embed_dim
  int degenerate_rows = 0;
};

struct LossReport {
  double j_r = 0.0;
  double j_c = 0.0;
  double l1 = 0.0;  // raw |W1|_1 + |W2|_1
  double total = 0.0;
  double alpha = 0.0;
  double l1_coeff = 0.0;
};

struct Gradients {
  DenseMatrix dw1;
  DenseMatrix dw2;
};

// Z = row_normalize(ReLU(L_hat ReLU(L_hat X W1) W2)).
Embedding encode(const EncoderParams& params, const RenormalizedLaplacian& lap,
                 const FeatureMatrix& x);

// Class-balanced binary cross-entropy between the adjacency (diagonal
// forced to 1) and Z Z^T, probabilities clamped to [1e-10, 1 - 1e-10];
// non-edge terms carry weight (#edges incl. diagonal) / (n^2 - #edges).
// Mean over all n^2 entries.
double reconstruction_loss(const Embedding& z, const SparseGraph& g);

// tr(Z Z^T) - tr(P^T Z Z^T P), evaluated as |Z|_F^2 - |Z^T P|_F^2.
// Rejects non-orthonormal P (tolerance 1e-6).
double clustering_loss(const Embedding& z, const DenseMatrix& p);

// indicator may be null when alpha is 0.
LossReport total_loss(const Embedding& z, const SparseGraph& g, const DenseMatrix* indicator,
                      double alpha, double l1_coeff, const EncoderParams& params);

// Analytic gradient of total_loss with the indicator held fixed. The L1
// term uses sign(w) with sign(0) = 0.
Gradients gradients(const EncoderParams& params, const RenormalizedLaplacian& lap,
                    const FeatureMatrix& x, const SparseGraph& g, const DenseMatrix* indicator,
                    double alpha, double l1_coeff);

// Shared forward/backward engine. Precomputes L_hat X once (kept sparse:
// features and Laplacian are non-negative, so zeros are structural) and is
// reused across training iterations.
class Evaluator {
 public:
  Evaluator(const RenormalizedLaplacian& lap, const FeatureMatrix& x);

  struct Result {
    LossReport report;
    Embedding z;
    Gradients grads;  // empty unless want_grad
  };

  Result eval(const EncoderParams& params, const SparseGraph& g, const DenseMatrix* indicator,
              double alpha, double l1_coeff, bool want_grad) const;

  Embedding embed(const EncoderParams& params) const;

  int n() const { return lap_.rows; }
  int in_dim() const { return in_dim_; }

 private:
  CsrMatrix lap_;
  CsrMatrix lx_;  // L_hat X
  int in_dim_;
};

// Checkpoint: magic, version, dims, seed, then W1 and W2 as row-major
// little-endian doubles.
void save_checkpoint(const std::string& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace egae
