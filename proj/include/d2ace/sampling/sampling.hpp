#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "d2ace/core/errors.hpp"
#include "d2ace/core/random_stream.hpp"

namespace d2ace {

/// Selection-pressure decay and mixing-coefficient schedule. Epochs count
/// from 1; epochs 1..warmup_epochs use random batches.
struct SamplingSchedule {
  double s_init = 100.0;
  std::size_t warmup_epochs = 10;  // T_w
  std::size_t total_epochs = 100;  // T
  double p_start = 0.7;
  double p_end = 0.3;
  std::size_t t_start = 30;
  std::size_t t_end = 70;

  void validate() const {
    if (!(s_init >= 1.0)) throw ConfigError("selection pressure s_init must be >= 1");
    if (p_start < 0.0 || p_start > 1.0 || p_end < 0.0 || p_end > 1.0)
      throw ConfigError("mixing endpoints must lie in [0,1]");
    if (t_end < t_start) throw ConfigError("t_end must not precede t_start");
  }
};

/// s(t) = s_init * exp(log(1/s_init) / (T - (T_w+1)))^(t - (T_w+1)) for
/// T_w < t <= T. With a single post-warm-up epoch the pressure stays s_init.
inline double selection_pressure(std::size_t t, const SamplingSchedule& sch) {
  if (t <= sch.warmup_epochs)
    throw ScheduleError("selection_pressure: epoch " + std::to_string(t) + " is inside warm-up");
  if (t > sch.total_epochs)
    throw ScheduleError("selection_pressure: epoch " + std::to_string(t) + " is past the last epoch");
  const double first = static_cast<double>(sch.warmup_epochs + 1);
  const double span = static_cast<double>(sch.total_epochs) - first;
  if (span <= 0.0) return sch.s_init;
  const double ratio = std::exp(std::log(1.0 / sch.s_init) / span);
  return std::max(1.0, sch.s_init * std::pow(ratio, static_cast<double>(t) - first));
}

/// Linear interpolation p_start -> p_end over [t_start, t_end], clamped
/// outside the window.
inline double mixing_coefficient(std::size_t t, const SamplingSchedule& sch) {
  if (t <= sch.t_start) return sch.p_start;
  if (t >= sch.t_end) return sch.p_end;
  const double frac = static_cast<double>(t - sch.t_start) / static_cast<double>(sch.t_end - sch.t_start);
  return sch.p_start + frac * (sch.p_end - sch.p_start);
}

/// Q = ceil((1 - w) / delta) with delta = 1/n, clamped to [0, n]. The
/// product is snapped to the nearest integer when within 1e-9 so that
/// exact grid points such as w = 0.3, n = 10 do not round up spuriously.
inline std::size_t quantization_index(double w, std::size_t n) {
  if (!(w >= 0.0 && w <= 1.0)) throw ContractError("quantization_index: weight outside [0,1]");
  if (n == 0) throw ContractError("quantization_index: n must be positive");
  const double x = (1.0 - w) * static_cast<double>(n);
  const double r = std::round(x);
  const double c = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
  return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(n)));
}

/// A categorical distribution over instances plus the quantization indices
/// it came from (empty for distributions not built from weights).
struct SamplingDistribution {
  std::vector<double> probs;
  std::vector<std::size_t> q_index;

  std::size_t size() const noexcept { return probs.size(); }

  static SamplingDistribution uniform(std::size_t n) {
    return {std::vector<double>(n, 1.0 / static_cast<double>(n)), {}};
  }
};

/// P_i proportional to s^(-Q_i / n), evaluated in log space.
inline SamplingDistribution quantized_distribution(std::span<const double> weights, double pressure) {
  const std::size_t n = weights.size();
  if (n == 0) throw ContractError("quantized_distribution: no weights");
  if (!(pressure >= 1.0)) throw ContractError("quantized_distribution: pressure must be >= 1");
  SamplingDistribution d;
  d.q_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.q_index[i] = quantization_index(weights[i], n);
  const double step = std::log(pressure) / static_cast<double>(n);
  const std::size_t qmin = *std::min_element(d.q_index.begin(), d.q_index.end());
  d.probs.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.probs[i] = std::exp(-step * static_cast<double>(d.q_index[i] - qmin));
    z += d.probs[i];
  }
  for (double& p : d.probs) p /= z;
  return d;
}

inline SamplingDistribution weight_to_probability(std::span<const double> weights, std::size_t t,
                                                  const SamplingSchedule& sch) {
  return quantized_distribution(weights, selection_pressure(t, sch));
}

/// p_beta * P_U + (1 - p_beta) * P_H.
inline SamplingDistribution mixture_distribution(const SamplingDistribution& pu, const SamplingDistribution& ph,
                                                 double p_beta) {
  if (pu.size() != ph.size()) throw ShapeError("mixture_distribution: distributions differ in size");
  if (p_beta < 0.0 || p_beta > 1.0) throw ContractError("mixture_distribution: p_beta outside [0,1]");
  SamplingDistribution m;
  m.probs.resize(pu.size());
  for (std::size_t i = 0; i < pu.size(); ++i) m.probs[i] = p_beta * pu.probs[i] + (1.0 - p_beta) * ph.probs[i];
  return m;
}

/// Inverse-CDF categorical sampler.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;
  explicit CategoricalSampler(std::span<const double> probs) : cdf_(probs.size()) {
    if (probs.empty()) throw ContractError("CategoricalSampler: empty distribution");
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!(probs[i] >= 0.0)) throw ContractError("CategoricalSampler: negative probability");
      acc += probs[i];
      cdf_[i] = acc;
    }
    if (!(acc > 0.0)) throw ContractError("CategoricalSampler: zero total mass");
  }

  std::size_t draw(RandomStream& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

/// b i.i.d. draws (with replacement) from one distribution.
inline std::vector<std::size_t> draw_batch(const SamplingDistribution& dist, std::size_t b, RandomStream& rng) {
  if (b == 0) throw ContractError("draw_batch: batch size must be >= 1");
  CategoricalSampler s(dist.probs);
  std::vector<std::size_t> out(b);
  for (auto& x : out) x = s.draw(rng);
  return out;
}

/// b draws without replacement (successive categorical draws with the
/// chosen mass removed). Requires b <= n.
inline std::vector<std::size_t> draw_batch_without_replacement(const SamplingDistribution& dist, std::size_t b,
                                                               RandomStream& rng) {
  if (b == 0 || b > dist.size()) throw ContractError("draw_batch_without_replacement: need 1 <= b <= n");
  std::vector<double> w = dist.probs;
  std::vector<std::size_t> out;
  out.reserve(b);
  for (std::size_t k = 0; k < b; ++k) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double u = rng.uniform() * total;
    std::size_t pick = w.size() - 1;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      if (u < w[i]) {
        pick = i;
        break;
      }
      u -= w[i];
      pick = i;
    }
    out.push_back(pick);
    w[pick] = 0.0;
  }
  return out;
}

/// Two-stage sampler: per draw, a Bernoulli(p_beta) coin picks the
/// uncertainty distribution (heads) or the hardness distribution, then an
/// index is drawn from it. Marginally this is mixture_distribution().
class MixtureSampler {
 public:
  MixtureSampler(const SamplingDistribution& pu, const SamplingDistribution& ph, double p_beta)
      : u_(pu.probs), h_(ph.probs), p_beta_(p_beta), marginal_(mixture_distribution(pu, ph, p_beta)) {}

  std::size_t draw(RandomStream& rng) const { return rng.bernoulli(p_beta_) ? u_.draw(rng) : h_.draw(rng); }

  std::vector<std::size_t> draw_batch(std::size_t b, RandomStream& rng) const {
    if (b == 0) throw ContractError("draw_batch: batch size must be >= 1");
    std::vector<std::size_t> out(b);
    for (auto& x : out) x = draw(rng);
    return out;
  }

  const SamplingDistribution& marginal() const noexcept { return marginal_; }
  double p_beta() const noexcept { return p_beta_; }

 private:
  CategoricalSampler u_;
  CategoricalSampler h_;
  double p_beta_;
  SamplingDistribution marginal_;
};

/// ceil(n / b) batches per epoch.
inline std::size_t batches_per_epoch(std::size_t n, std::size_t b) { return (n + b - 1) / b; }

}  // namespace d2ace
