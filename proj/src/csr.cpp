#include "egae/csr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace egae {

double CsrMatrix::at(int i, int j) const {
  const auto begin = col_idx.begin() + row_ptr[i];
  const auto end = col_idx.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      d(i, col_idx[static_cast<std::size_t>(k)]) = values[static_cast<std::size_t>(k)];
  return d;
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  for (int i = 0; i < rows; ++i)
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int j = col_idx[static_cast<std::size_t>(k)];
      if (std::abs(values[static_cast<std::size_t>(k)] - at(j, i)) > tol) return false;
    }
  return true;
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(n + 1);
  m.col_idx.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.row_ptr[i] = i;
    m.col_idx[i] = i;
  }
  m.row_ptr[n] = n;
  return m;
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols,
                                   std::vector<std::tuple<int, int, double>> triplets,
                                   bool drop_zeros) {
  for (const auto& [i, j, v] : triplets) {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw std::invalid_argument("csr: triplet index out of range");
    (void)v;
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });

  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  m.col_idx.reserve(triplets.size());
  m.values.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    // duplicates collapse, last occurrence wins
    if (k + 1 < triplets.size() && std::get<0>(triplets[k]) == std::get<0>(triplets[k + 1]) &&
        std::get<1>(triplets[k]) == std::get<1>(triplets[k + 1]))
      continue;
    const auto& [i, j, v] = triplets[k];
    if (drop_zeros && v == 0.0) continue;
    m.col_idx.push_back(j);
    m.values.push_back(v);
    ++m.row_ptr[i + 1];
  }
  for (int i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

DenseMatrix spmm(const CsrMatrix& s, const DenseMatrix& m) {
  if (s.cols != m.rows()) throw std::invalid_argument("spmm: dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(s.rows, m.cols());
  for (int i = 0; i < s.rows; ++i) {
    auto dst = out.row(i);
    for (std::int64_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
      dst += s.values[static_cast<std::size_t>(k)] * m.row(s.col_idx[static_cast<std::size_t>(k)]);
  }
  return out;
}

DenseMatrix spmm_transposed(const CsrMatrix& s, const DenseMatrix& m) {
  if (s.rows != m.rows()) throw std::invalid_argument("spmm_transposed: dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(s.cols, m.cols());
  for (int i = 0; i < s.rows; ++i) {
    const auto src = m.row(i);
    for (std::int64_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
      out.row(s.col_idx[static_cast<std::size_t>(k)]) += s.values[static_cast<std::size_t>(k)] * src;
  }
  return out;
}

}  // namespace egae
