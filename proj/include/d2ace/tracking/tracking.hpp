#pragma once

#include <cmath>
#include <deque>
#include <span>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/model/mlp.hpp"

namespace d2ace {

/// Binary entropy in bits. Inputs are clamped to [kProbEps, 1 - kProbEps].
inline double binary_entropy(double p) noexcept {
  p = clamp_prob(p);
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

/// Mean absolute change between adjacent entries of the last `window`
/// values of `series` (chronological). Fewer than two values give 0.
inline double temporal_fluctuation(std::span<const double> series, std::size_t window) {
  const std::size_t m = std::min(series.size(), window);
  if (m < 2) return 0.0;
  const auto tail = series.subspan(series.size() - m);
  double s = 0.0;
  for (std::size_t k = 1; k < m; ++k) s += std::abs(tail[k] - tail[k - 1]);
  return s / static_cast<double>(m - 1);
}

/// h = loss * (1 - ema_flip), element-wise.
inline DenseMatrix compute_hardness(const DenseMatrix& loss, const DenseMatrix& ema_flip) {
  detail::require_shape(loss.rows() == ema_flip.rows() && loss.cols() == ema_flip.cols(), "compute_hardness",
                        "loss and flip EMA differ in shape");
  DenseMatrix h(loss.rows(), loss.cols());
  for (std::size_t k = 0; k < h.size(); ++k) h.data()[k] = loss.data()[k] * (1.0 - ema_flip.data()[k]);
  return h;
}

struct TrackingConfig {
  std::size_t window = 5;        // n_t
  double lambda1 = 0.5;          // entropy vs fluctuation
  double lambda2 = 0.7;          // flip EMA smoothing
  double threshold = 0.5;        // probability -> relevance
};

/// Sliding window of per-epoch n x q probability matrices plus the flip EMA.
/// Updated once per epoch by a single writer.
class PredictionHistory {
 public:
  PredictionHistory() = default;
  PredictionHistory(std::size_t n, std::size_t q, TrackingConfig cfg = {})
      : cfg_(cfg), n_(n), q_(q), ema_flip_(n, q, 0.0) {
    if (cfg_.window < 1) throw ConfigError("history window must be >= 1");
    if (cfg_.lambda1 < 0.0 || cfg_.lambda1 > 1.0) throw ConfigError("lambda1 must be in [0,1]");
    if (cfg_.lambda2 <= 0.0 || cfg_.lambda2 > 1.0) throw ConfigError("lambda2 must be in (0,1]");
  }

  const TrackingConfig& config() const noexcept { return cfg_; }
  std::size_t epochs_seen() const noexcept { return seen_; }
  std::size_t size() const noexcept { return window_.size(); }
  const std::deque<DenseMatrix>& window() const noexcept { return window_; }
  const DenseMatrix& current() const { return window_.back(); }
  const DenseMatrix& ema_flip() const noexcept { return ema_flip_; }

  /// Appends this epoch's predictions and advances the flip EMA.
  void push(const DenseMatrix& probs) {
    detail::require_shape(probs.rows() == n_ && probs.cols() == q_, "PredictionHistory::push",
                          "prediction matrix shape differs from history");
    if (!window_.empty()) update_ema_flip(window_.back(), probs);
    window_.push_back(probs);
    if (window_.size() > cfg_.window) window_.pop_front();
    ++seen_;
  }

  /// Element-wise binary entropy of the latest predictions.
  DenseMatrix entropy() const {
    require_nonempty();
    const auto& p = current();
    DenseMatrix e(n_, q_);
    for (std::size_t k = 0; k < e.size(); ++k) e.data()[k] = binary_entropy(p.data()[k]);
    return e;
  }

  /// Mean absolute adjacent difference over the retained window.
  DenseMatrix fluctuation() const {
    require_nonempty();
    DenseMatrix d(n_, q_);
    const std::size_t m = window_.size();
    if (m < 2) return d;
    for (std::size_t t = 1; t < m; ++t) {
      auto a = window_[t - 1].data();
      auto b = window_[t].data();
      for (std::size_t k = 0; k < d.size(); ++k) d.data()[k] += std::abs(b[k] - a[k]);
    }
    const double inv = 1.0 / static_cast<double>(m - 1);
    for (double& v : d.data()) v *= inv;
    return d;
  }

  /// u = lambda1 * entropy + (1 - lambda1) * fluctuation.
  DenseMatrix uncertainty() const { return uncertainty(cfg_.lambda1); }

  DenseMatrix uncertainty(double lambda1) const {
    const auto e = entropy();
    const auto d = fluctuation();
    DenseMatrix u(n_, q_);
    for (std::size_t k = 0; k < u.size(); ++k)
      u.data()[k] = lambda1 * e.data()[k] + (1.0 - lambda1) * d.data()[k];
    return u;
  }

  /// Latest predictions thresholded to {0,1}.
  DenseMatrix thresholded() const {
    require_nonempty();
    DenseMatrix t(n_, q_);
    for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = current().data()[k] >= cfg_.threshold ? 1.0 : 0.0;
    return t;
  }

 private:
  void require_nonempty() const {
    if (window_.empty()) throw ContractError("PredictionHistory: no predictions recorded yet");
  }

  void update_ema_flip(const DenseMatrix& prev, const DenseMatrix& cur) {
    const double l2 = cfg_.lambda2;
    for (std::size_t k = 0; k < ema_flip_.size(); ++k) {
      const bool a = prev.data()[k] >= cfg_.threshold;
      const bool b = cur.data()[k] >= cfg_.threshold;
      const double flip = a != b ? 1.0 : 0.0;
      ema_flip_.data()[k] = l2 * flip + (1.0 - l2) * ema_flip_.data()[k];
    }
  }

  TrackingConfig cfg_;
  std::size_t n_ = 0;
  std::size_t q_ = 0;
  std::size_t seen_ = 0;
  std::deque<DenseMatrix> window_;
  DenseMatrix ema_flip_;
};

inline DenseMatrix compute_uncertainty(const PredictionHistory& history, double lambda1) {
  return history.uncertainty(lambda1);
}

/// One EMA step on scalars: lambda2 * flip + (1 - lambda2) * previous.
inline double ema_step(double previous, double flip, double lambda2) noexcept {
  return lambda2 * flip + (1.0 - lambda2) * previous;
}

/// Uncertainty and hardness snapshot for one epoch.
struct MetricMatrices {
  DenseMatrix uncertainty;
  DenseMatrix hardness;
  std::size_t epoch = 0;
};

inline MetricMatrices compute_metrics(const PredictionHistory& history, const DenseMatrix& loss,
                                      std::size_t epoch) {
  return {history.uncertainty(), compute_hardness(loss, history.ema_flip()), epoch};
}

}  // namespace d2ace
