#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

namespace d2ace {

// ---------------------------------------------------------------------------
// Dynamic label weights
// ---------------------------------------------------------------------------

struct LabelStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> v;
};

/// Column means, population standard deviations via E[a^2] - mu^2 (negative
/// round-off clamped to 0), and label weights v = exp((mu + sigma) / 2).
inline LabelStats label_stats(const DenseMatrix& metric) {
  const std::size_t n = metric.rows();
  const std::size_t q = metric.cols();
  if (n == 0) throw ContractError("label_stats: metric has no rows");
  LabelStats s{std::vector<double>(q, 0.0), std::vector<double>(q, 0.0), std::vector<double>(q)};
  std::vector<double> sq(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = metric.row(i);
    for (std::size_t j = 0; j < q; ++j) {
      s.mu[j] += r[j];
      sq[j] += r[j] * r[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < q; ++j) {
    s.mu[j] *= inv;
    s.sigma[j] = std::sqrt(std::max(0.0, sq[j] * inv - s.mu[j] * s.mu[j]));
    s.v[j] = std::exp(0.5 * (s.mu[j] + s.sigma[j]));
  }
  return s;
}

/// delta_i = sum_j A_ij v_j.
inline std::vector<double> dynamic_label_weighted_sum(const DenseMatrix& metric, const LabelStats& stats) {
  detail::require_shape(stats.v.size() == metric.cols(), "dynamic_label_weighted_sum",
                        "label weight count != metric columns");
  std::vector<double> delta(metric.rows(), 0.0);
  for (std::size_t i = 0; i < metric.rows(); ++i) {
    auto r = metric.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * stats.v[j];
    delta[i] = s;
  }
  return delta;
}

// ---------------------------------------------------------------------------
// Relevance-masked metric and label correlation
// ---------------------------------------------------------------------------

/// Y (.) A stored on the sparsity pattern of Y. Row i holds (label, value)
/// pairs in ascending label order.
struct MaskedMetric {
  std::size_t cols = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;

  std::size_t rows() const noexcept { return entries.size(); }
  std::size_t nnz() const noexcept {
    std::size_t k = 0;
    for (const auto& r : entries) k += r.size();
    return k;
  }

  DenseMatrix denseify() const {
    DenseMatrix d(rows(), cols);
    for (std::size_t i = 0; i < rows(); ++i)
      for (auto [j, v] : entries[i]) d(i, j) = v;
    return d;
  }
};

inline MaskedMetric masked_metric(const DenseMatrix& metric, const SparseBinaryMatrix& labels) {
  detail::require_shape(metric.rows() == labels.rows() && metric.cols() == labels.cols(), "masked_metric",
                        "metric and label matrix differ in shape");
  MaskedMetric m{metric.cols(), {}};
  m.entries.resize(metric.rows());
  for (std::size_t i = 0; i < metric.rows(); ++i) {
    auto& row = m.entries[i];
    row.reserve(labels.row(i).size());
    for (std::size_t j : labels.row(i)) row.emplace_back(j, metric(i, j));
  }
  return m;
}

/// Columns whose L2 norm falls below this are treated as all-zero.
inline constexpr double kZeroColumnNorm = 1e-12;

namespace detail {

inline std::vector<double> column_norms(const MaskedMetric& m) {
  std::vector<double> norm(m.cols, 0.0);
  for (const auto& row : m.entries)
    for (auto [j, v] : row) norm[j] += v * v;
  for (auto& x : norm) x = std::sqrt(x);
  return norm;
}

inline double inv_norm(double norm) { return norm < kZeroColumnNorm ? 0.0 : 1.0 / norm; }

}  // namespace detail

/// Cosine similarity between the columns of M as a dense q x q matrix.
/// Diagonal is exactly 1 for nonzero columns; zero columns stay zero.
inline DenseMatrix cosine_correlation(const MaskedMetric& m) {
  const auto norm = detail::column_norms(m);
  DenseMatrix c(m.cols, m.cols);
  for (const auto& row : m.entries)
    for (auto [j, vj] : row) {
      const double a = vj * detail::inv_norm(norm[j]);
      for (auto [k, vk] : row) c(j, k) += a * (vk * detail::inv_norm(norm[k]));
    }
  for (std::size_t j = 0; j < m.cols; ++j) c(j, j) = norm[j] < kZeroColumnNorm ? 0.0 : 1.0;
  return c;
}

/// Symmetric correlation in compressed rows: only label pairs that co-occur
/// in some row of M are stored. Built in O(sigma(Y)^2 / n) for roughly
/// uniform row densities, independent of q^2.
struct SparseCorrelation {
  std::size_t q = 0;
  std::vector<std::size_t> row_ptr;  // q + 1
  std::vector<std::size_t> col;      // ascending within a row
  std::vector<double> value;

  double at(std::size_t j, std::size_t k) const {
    auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[j]);
    auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[j + 1]);
    auto it = std::lower_bound(b, e, k);
    return it != e && *it == k ? value[static_cast<std::size_t>(it - col.begin())] : 0.0;
  }

  DenseMatrix denseify() const {
    DenseMatrix d(q, q);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) d(j, col[p]) = value[p];
    return d;
  }
};

inline SparseCorrelation cosine_correlation_sparse(const MaskedMetric& m) {
  const auto norm = detail::column_norms(m);
  // (j, k, contribution) triplets in row order; a stable sort by (j, k)
  // keeps the per-cell summation order equal to the dense path's.
  std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
  std::size_t total = 0;
  for (const auto& row : m.entries) total += row.size() * row.size();
  trip.reserve(total);
  for (const auto& row : m.entries)
    for (auto [j, vj] : row) {
      const double a = vj * detail::inv_norm(norm[j]);
      for (auto [k, vk] : row)
        if (j != k) trip.emplace_back(j, k, a * (vk * detail::inv_norm(norm[k])));
    }
  std::stable_sort(trip.begin(), trip.end(), [](const auto& x, const auto& y) {
    return std::get<0>(x) != std::get<0>(y) ? std::get<0>(x) < std::get<0>(y) : std::get<1>(x) < std::get<1>(y);
  });

  SparseCorrelation c;
  c.q = m.cols;
  c.row_ptr.assign(m.cols + 1, 0);
  std::size_t p = 0;
  for (std::size_t j = 0; j < m.cols; ++j) {
    c.row_ptr[j] = c.col.size();
    bool diag_done = norm[j] < kZeroColumnNorm;
    auto emit_diag = [&] {
      c.col.push_back(j);
      c.value.push_back(1.0);
      diag_done = true;
    };
    while (p < trip.size() && std::get<0>(trip[p]) == j) {
      const std::size_t k = std::get<1>(trip[p]);
      if (!diag_done && k > j) emit_diag();
      double s = 0.0;
      while (p < trip.size() && std::get<0>(trip[p]) == j && std::get<1>(trip[p]) == k) s += std::get<2>(trip[p++]);
      c.col.push_back(k);
      c.value.push_back(s);
    }
    if (!diag_done) emit_diag();
  }
  c.row_ptr[m.cols] = c.col.size();
  return c;
}

// ---------------------------------------------------------------------------
// Local label appearance and correlation enhancement
// ---------------------------------------------------------------------------

/// Z_ij = 1 iff instance i or one of its listed neighbors carries label j.
inline SparseBinaryMatrix local_appearance(const SparseBinaryMatrix& labels, const NeighborTable& neighbors) {
  detail::require_shape(neighbors.size() == labels.rows(), "local_appearance",
                        "neighbor table rows != label rows");
  std::vector<SparseBinaryMatrix::Row> rows(labels.rows());
  std::vector<char> mark(labels.cols(), 0);
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    auto& r = rows[i];
    auto take = [&](std::size_t m) {
      for (std::size_t j : labels.row(m))
        if (!mark[j]) {
          mark[j] = 1;
          r.push_back(j);
        }
    };
    take(i);
    for (std::size_t m : neighbors.neighbors[i]) take(m);
    for (std::size_t j : r) mark[j] = 0;
  }
  return SparseBinaryMatrix(labels.cols(), std::move(rows));
}

/// phi_i = sum_j M_ij * (Z C)_ij with a dense C. Only entries on M's pattern
/// are formed, each as a sum over the set bits of Z_i.
inline std::vector<double> correlation_enhance(const MaskedMetric& m, const SparseBinaryMatrix& z,
                                               const DenseMatrix& c) {
  detail::require_shape(z.rows() == m.rows() && z.cols() == m.cols && c.rows() == m.cols && c.cols() == m.cols,
                        "correlation_enhance", "inconsistent M / Z / C shapes");
  std::vector<double> phi(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (auto [j, mij] : m.entries[i]) {
      double zc = 0.0;
      for (std::size_t k : z.row(i)) zc += c(k, j);
      acc += mij * zc;
    }
    phi[i] = acc;
  }
  return phi;
}

/// Same quantity against a sparse symmetric C: (Z C)_ij is the merge of Z_i
/// with the stored row j of C.
inline std::vector<double> correlation_enhance(const MaskedMetric& m, const SparseBinaryMatrix& z,
                                               const SparseCorrelation& c) {
  detail::require_shape(z.rows() == m.rows() && z.cols() == m.cols && c.q == m.cols, "correlation_enhance",
                        "inconsistent M / Z / C shapes");
  std::vector<double> phi(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto zi = z.row(i);
    double acc = 0.0;
    for (auto [j, mij] : m.entries[i]) {
      double zc = 0.0;
      std::size_t a = 0;
      std::size_t p = c.row_ptr[j];
      const std::size_t pe = c.row_ptr[j + 1];
      while (a < zi.size() && p < pe) {
        if (zi[a] < c.col[p]) ++a;
        else if (c.col[p] < zi[a]) ++p;
        else {
          zc += c.value[p];
          ++a;
          ++p;
        }
      }
      acc += mij * zc;
    }
    phi[i] = acc;
  }
  return phi;
}

/// R = M (.) (Z C) on M's sparsity pattern, using the sparse C.
inline MaskedMetric correlation_enhanced_entries(const MaskedMetric& m, const SparseBinaryMatrix& z,
                                                 const SparseCorrelation& c) {
  detail::require_shape(z.rows() == m.rows() && z.cols() == m.cols && c.q == m.cols,
                        "correlation_enhanced_entries", "inconsistent M / Z / C shapes");
  MaskedMetric r{m.cols, std::vector<std::vector<std::pair<std::size_t, double>>>(m.rows())};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto zi = z.row(i);
    for (auto [j, mij] : m.entries[i]) {
      double zc = 0.0;
      std::size_t a = 0;
      std::size_t p = c.row_ptr[j];
      const std::size_t pe = c.row_ptr[j + 1];
      while (a < zi.size() && p < pe) {
        if (zi[a] < c.col[p]) ++a;
        else if (c.col[p] < zi[a]) ++p;
        else {
          zc += c.value[p];
          ++a;
          ++p;
        }
      }
      r.entries[i].emplace_back(j, mij * zc);
    }
  }
  return r;
}

/// Dense R = M (.) (Z C), mainly for diagnostics and cross-checks.
inline DenseMatrix correlation_enhanced_matrix(const MaskedMetric& m, const SparseBinaryMatrix& z,
                                               const DenseMatrix& c) {
  const auto zc = sparse_dense_matmul(z, c);
  DenseMatrix r(m.rows(), m.cols);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (auto [j, v] : m.entries[i]) r(i, j) = v * zc(i, j);
  return r;
}

// ---------------------------------------------------------------------------
// Final instance weights
// ---------------------------------------------------------------------------

struct InstanceWeights {
  std::vector<double> delta;
  std::vector<double> phi;
  std::vector<double> raw;         // delta + phi
  std::vector<double> normalized;  // min-max mapped into [0, 1]
};

/// Min-max maps raw weights into [0, 1]. A constant vector maps to 0.5.
inline std::vector<double> minmax_normalize(std::span<const double> raw) {
  for (double x : raw)
    if (!std::isfinite(x)) throw ContractError("minmax_normalize: non-finite weight");
  std::vector<double> w(raw.size(), 0.5);
  if (raw.empty()) return w;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return w;
  for (std::size_t i = 0; i < raw.size(); ++i) w[i] = std::clamp((raw[i] - *lo) / span, 0.0, 1.0);
  return w;
}

inline InstanceWeights finalize_weights(std::vector<double> delta, std::vector<double> phi) {
  detail::require_shape(delta.size() == phi.size(), "finalize_weights", "delta and phi lengths differ");
  InstanceWeights w;
  w.raw.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) w.raw[i] = delta[i] + phi[i];
  w.normalized = minmax_normalize(w.raw);
  w.delta = std::move(delta);
  w.phi = std::move(phi);
  return w;
}

struct WeightingOptions {
  bool mask = true;        // relevance filtering by Y
  bool sparse_path = true; // sparse C for the enhancement step
};

/// Full metric -> instance weight pipeline for one metric matrix A.
inline InstanceWeights compute_instance_weights(const DenseMatrix& metric, const SparseBinaryMatrix& labels,
                                                const SparseBinaryMatrix& local, WeightingOptions opt = {}) {
  const auto stats = label_stats(metric);
  auto delta = dynamic_label_weighted_sum(metric, stats);
  const auto m = opt.mask ? masked_metric(metric, labels)
                          : masked_metric(metric, SparseBinaryMatrix::ones(metric.rows(), metric.cols()));
  auto phi = opt.sparse_path ? correlation_enhance(m, local, cosine_correlation_sparse(m))
                             : correlation_enhance(m, local, cosine_correlation(m));
  return finalize_weights(std::move(delta), std::move(phi));
}

// ---------------------------------------------------------------------------
// Global-correlation special case
// ---------------------------------------------------------------------------

namespace detail {

/// w_i = sum_j U_ij * (sum_k C_jk), with no symmetry requirement.
inline std::vector<double> row_sum_weighted(const DenseMatrix& u, const DenseMatrix& c) {
  require_shape(c.rows() == u.cols() && c.cols() == u.cols(), "mlunc_degenerate_weights",
                "C must be q x q for q = U.cols");
  std::vector<double> csum(c.rows(), 0.0);
  for (std::size_t j = 0; j < c.rows(); ++j)
    for (double v : c.row(j)) csum[j] += v;
  std::vector<double> w(u.rows(), 0.0);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.cols(); ++j) s += u(i, j) * csum[j];
    w[i] = s;
  }
  return w;
}

}  // namespace detail

inline bool is_symmetric(const DenseMatrix& c, double tol = 1e-12) {
  if (c.rows() != c.cols()) return false;
  for (std::size_t j = 0; j < c.rows(); ++j)
    for (std::size_t k = j + 1; k < c.cols(); ++k)
      if (std::abs(c(j, k) - c(k, j)) > tol) return false;
  return true;
}

/// Instance weights when no relevance mask is applied and every instance
/// sees the whole dataset: w_i = sum_j U_ij * sum_k C_jk. Requires C
/// symmetric.
inline std::vector<double> mlunc_degenerate_weights(const DenseMatrix& u, const DenseMatrix& c) {
  if (!is_symmetric(c)) throw ContractError("mlunc_degenerate_weights: correlation matrix is not symmetric");
  return detail::row_sum_weighted(u, c);
}

}  // namespace d2ace
