#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"

namespace d2ace {

/// A 0/1 matrix storing, per row, the sorted column indices of its set bits.
/// Holds the ground-truth label matrix and the local label appearance matrix.
class SparseBinaryMatrix {
 public:
  using Row = std::vector<std::size_t>;

  SparseBinaryMatrix() = default;
  SparseBinaryMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows) {}

  /// Builds from per-row column lists. Lists are sorted and must not repeat.
  SparseBinaryMatrix(std::size_t cols, std::vector<Row> rows) : cols_(cols), rows_(std::move(rows)) {
    for (auto& r : rows_) {
      std::sort(r.begin(), r.end());
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (r[k] >= cols_) throw ShapeError("SparseBinaryMatrix: column index out of range");
        if (k > 0 && r[k] == r[k - 1]) throw ShapeError("SparseBinaryMatrix: duplicate column index");
      }
    }
  }

  /// Any nonzero entry becomes a set bit.
  static SparseBinaryMatrix from_dense(const DenseMatrix& d) {
    SparseBinaryMatrix s(d.rows(), d.cols());
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) s.rows_[i].push_back(j);
    return s;
  }

  static SparseBinaryMatrix ones(std::size_t rows, std::size_t cols) {
    SparseBinaryMatrix s(rows, cols);
    for (auto& r : s.rows_) {
      r.resize(cols);
      for (std::size_t j = 0; j < cols; ++j) r[j] = j;
    }
    return s;
  }

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const std::size_t> row(std::size_t i) const noexcept { return rows_[i]; }

  bool get(std::size_t i, std::size_t j) const noexcept {
    const auto& r = rows_[i];
    return std::binary_search(r.begin(), r.end(), j);
  }

  void set(std::size_t i, std::size_t j) {
    if (j >= cols_) throw ShapeError("SparseBinaryMatrix::set: column out of range");
    auto& r = rows_[i];
    auto it = std::lower_bound(r.begin(), r.end(), j);
    if (it == r.end() || *it != j) r.insert(it, j);
  }

  std::size_t nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  /// Number of set bits in each column.
  std::vector<std::size_t> column_counts() const {
    std::vector<std::size_t> c(cols_, 0);
    for (const auto& r : rows_)
      for (std::size_t j : r) ++c[j];
    return c;
  }

  DenseMatrix denseify() const {
    DenseMatrix d(rows(), cols_);
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j : rows_[i]) d(i, j) = 1.0;
    return d;
  }

  SparseBinaryMatrix select_rows(std::span<const std::size_t> idx) const {
    SparseBinaryMatrix out(idx.size(), cols_);
    for (std::size_t r = 0; r < idx.size(); ++r) out.rows_[r] = rows_[idx[r]];
    return out;
  }

  friend bool operator==(const SparseBinaryMatrix&, const SparseBinaryMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<Row> rows_;
};

/// z * c, touching only the set bits of z: work is nnz(z) * c.cols().
/// Per output cell the summands are added in ascending column order of z,
/// which is the order matmul(denseify(z), c) uses, so results agree exactly.
inline DenseMatrix sparse_dense_matmul(const SparseBinaryMatrix& z, const DenseMatrix& c) {
  detail::require_shape(z.cols() == c.rows(), "sparse_dense_matmul",
                        "z.cols " + std::to_string(z.cols()) + " != c.rows " + std::to_string(c.rows()));
  DenseMatrix out(z.rows(), c.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k : z.row(i)) {
      auto src = c.row(k);
      for (std::size_t j = 0; j < c.cols(); ++j) dst[j] += src[j];
    }
  }
  return out;
}

}  // namespace d2ace
