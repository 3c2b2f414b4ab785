#pragma once

#include <cstdint>
#include <vector>

#include "egae/dense.hpp"

namespace egae {

// Compressed sparse row matrix. Column indices are sorted within each row
// and hold no duplicates or explicit zeros (builders enforce this).
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> row_ptr;  // size rows + 1
  std::vector<int> col_idx;
  std::vector<double> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }

  double at(int i, int j) const;
  DenseMatrix to_dense() const;
  bool is_symmetric(double tol = 0.0) const;

  static CsrMatrix identity(int n);

  // Builds from triplets; duplicates collapse (last value wins).
  static CsrMatrix from_triplets(int rows, int cols,
                                 std::vector<std::tuple<int, int, double>> triplets,
                                 bool drop_zeros = true);
};

// Exact sparse-dense product s * m.
DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& m);

// s^T * m without materializing the transpose.
DenseMatrix spmm_transposed(const CsrMatrix& s, const DenseMatrix& m);

}  // namespace egae
