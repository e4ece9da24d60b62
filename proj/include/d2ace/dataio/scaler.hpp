#pragma once

#include <cmath>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"

namespace d2ace {

/// Per-feature affine map to zero mean and unit (population) variance,
/// fitted on one matrix and applied to others.
class FeatureScaler {
 public:
  static FeatureScaler fit(const DenseMatrix& x) {
    FeatureScaler s;
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    s.mean_.assign(d, 0.0);
    s.scale_.assign(d, 0.0);
    if (n == 0) throw DataError("FeatureScaler::fit on empty matrix");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) s.mean_[j] += x(i, j);
    for (auto& m : s.mean_) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x(i, j) - s.mean_[j];
        s.scale_[j] += c * c;
      }
    for (auto& v : s.scale_) {
      v = std::sqrt(v / static_cast<double>(n));
      if (v < 1e-12) v = 1.0;  // constant feature: center only
    }
    return s;
  }

  DenseMatrix transform(const DenseMatrix& x) const {
    detail::require_shape(x.cols() == mean_.size(), "FeatureScaler::transform", "feature count differs");
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean_[j]) / scale_[j];
    return out;
  }

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& scale() const noexcept { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace d2ace
