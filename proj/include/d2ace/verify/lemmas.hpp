#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"
#include "d2ace/model/mlp.hpp"
#include "d2ace/sampling/sampling.hpp"
#include "d2ace/tracking/tracking.hpp"
#include "d2ace/weighting/weighting.hpp"

namespace d2ace {

/// Outcome of one executable check. For checks with a negative control,
/// `passed` also requires the control to have been detected.
struct LemmaReport {
  std::string lemma_id;
  std::size_t trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double runtime_s = 0.0;
  bool has_control = false;
  double control_violation = 0.0;
  bool control_detected = false;
  nlohmann::json details = nlohmann::json::object();
};

inline nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json j = {{"lemma_id", r.lemma_id},   {"trials", r.trials},       {"max_violation", r.max_violation},
                      {"tolerance", r.tolerance}, {"passed", r.passed},       {"runtime_s", r.runtime_s},
                      {"details", r.details}};
  if (r.has_control) {
    j["control_violation"] = r.control_violation;
    j["control_detected"] = r.control_detected;
  }
  return j;
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline double json_safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::max(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Positivity
// ---------------------------------------------------------------------------

inline constexpr double kNormalizationTol = 1e-12;

/// Random (weights, epoch, schedule, p_beta) tuples through the full
/// weight -> mixture pipeline. A violation is either a non-positive
/// probability or a total mass off 1 by more than kNormalizationTol.
inline LemmaReport verify_positivity(std::size_t fuzz_count, std::uint64_t seed = 0) {
  detail::Stopwatch clock;
  RandomStream rng(seed, {0, 0, 0, purpose::kFuzz});
  LemmaReport rep{"lemma1_positivity", fuzz_count};
  rep.tolerance = kNormalizationTol;
  double min_p = 1.0;
  std::size_t nonpositive = 0;
  for (std::size_t trial = 0; trial < fuzz_count; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(127));
    auto weights = [&] {
      std::vector<double> w(n);
      switch (rng.below(3)) {
        case 0:  // one-hot extreme
          w.assign(n, 0.0);
          w[rng.below(n)] = 1.0;
          break;
        case 1:
          for (auto& v : w) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
          break;
        default:
          for (auto& v : w) v = rng.uniform();
      }
      return minmax_normalize(w);
    };
    SamplingSchedule sch;
    sch.s_init = rng.uniform(1.0, 1000.0);
    sch.warmup_epochs = static_cast<std::size_t>(rng.below(21));
    sch.total_epochs = sch.warmup_epochs + 1 + static_cast<std::size_t>(rng.below(200));
    const std::size_t t = sch.warmup_epochs + 1 + static_cast<std::size_t>(rng.below(sch.total_epochs - sch.warmup_epochs));
    const double p_beta = [&] {
      switch (rng.below(3)) {
        case 0: return 0.0;
        case 1: return 1.0;
        default: return rng.uniform();
      }
    }();
    const auto pu = weight_to_probability(weights(), t, sch);
    const auto ph = weight_to_probability(weights(), t, sch);
    const auto mix = mixture_distribution(pu, ph, p_beta);
    double sum = 0.0;
    for (double p : mix.probs) {
      sum += p;
      min_p = std::min(min_p, p);
      if (!(p > 0.0)) ++nonpositive;
    }
    rep.max_violation = std::max(rep.max_violation, std::abs(sum - 1.0));
  }
  if (nonpositive) rep.max_violation = std::numeric_limits<double>::infinity();
  rep.passed = nonpositive == 0 && rep.max_violation <= rep.tolerance;
  rep.details = {{"min_probability", min_p}, {"nonpositive_count", nonpositive}};
  rep.max_violation = detail::json_safe(rep.max_violation);
  rep.runtime_s = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Small training instance shared by the gradient checks
// ---------------------------------------------------------------------------

struct LemmaInstanceConfig {
  std::size_t n = 32;
  std::size_t q = 4;
  std::size_t d = 6;
  std::size_t hidden = 8;
  std::size_t neighbors = 4;
  double label_rate = 0.35;
};

/// Synthetic data, a randomly initialised one-hidden-layer model, exact
/// per-instance gradients and a D2ACE mixture distribution computed from a
/// short simulated prediction history.
struct LemmaInstance {
  DenseMatrix features;
  SparseBinaryMatrix labels;
  MlpModel model;
  DenseMatrix per_instance_grad;   // n x P; row i = grad of instance i's summed label loss
  std::vector<double> full_grad;   // mean of the rows
  SamplingDistribution pu, ph;
  double p_beta = 0.7;
  SamplingDistribution marginal;
  double pressure = 0.0;

  std::size_t n() const noexcept { return features.rows(); }
};

inline LemmaInstance make_lemma_instance(const LemmaInstanceConfig& cfg, std::uint64_t seed) {
  if (cfg.n < 2 || cfg.q < 2) throw ConfigError("lemma instance needs n >= 2 and q >= 2");
  RandomStream rng(seed, {0, 0, 0, purpose::kSynthetic});
  LemmaInstance inst;
  inst.features = DenseMatrix(cfg.n, cfg.d);
  for (double& v : inst.features.data()) v = rng.normal();
  std::vector<SparseBinaryMatrix::Row> rows(cfg.n);
  for (auto& r : rows)
    for (std::size_t j = 0; j < cfg.q; ++j)
      if (rng.bernoulli(cfg.label_rate)) r.push_back(j);
  inst.labels = SparseBinaryMatrix(cfg.q, std::move(rows));
  inst.model = MlpModel({cfg.d, cfg.hidden, cfg.q}, rng);

  const std::size_t np = inst.model.parameter_count();
  inst.per_instance_grad = DenseMatrix(cfg.n, np);
  inst.full_grad.assign(np, 0.0);
  const std::vector<double> one{1.0};
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::vector<std::size_t> idx{i};
    const auto g = loss_gradient(inst.model, inst.features.select_rows(idx), inst.labels.select_rows(idx), one);
    std::copy(g.begin(), g.end(), inst.per_instance_grad.row(i).begin());
    for (std::size_t c = 0; c < np; ++c) inst.full_grad[c] += g[c] / static_cast<double>(cfg.n);
  }

  // a few noisy prediction epochs feed the real weighting pipeline
  const auto probs = inst.model.forward(inst.features);
  PredictionHistory hist(cfg.n, cfg.q);
  for (int e = 0; e < 5; ++e) {
    DenseMatrix p(cfg.n, cfg.q);
    for (std::size_t k = 0; k < p.size(); ++k)
      p.data()[k] = clamp_prob(probs.data()[k] + 0.25 * (rng.uniform() - 0.5));
    hist.push(p);
  }
  const auto loss = bce_loss_matrix(hist.current(), inst.labels);
  const auto metrics = compute_metrics(hist, loss, 5);
  const auto local = local_appearance(inst.labels, knn_bruteforce(standardize_columns(inst.features), cfg.neighbors));
  const auto wu = compute_instance_weights(metrics.uncertainty, inst.labels, local);
  const auto wh = compute_instance_weights(metrics.hardness, inst.labels, local);
  SamplingSchedule sch;
  inst.pressure = selection_pressure(sch.warmup_epochs + 1, sch);
  inst.pu = quantized_distribution(wu.normalized, inst.pressure);
  inst.ph = quantized_distribution(wh.normalized, inst.pressure);
  inst.marginal = mixture_distribution(inst.pu, inst.ph, inst.p_beta);
  return inst;
}

/// Per-coordinate Monte Carlo statistics of the batch estimator
/// (1/b) sum_k g_{i_k} * scale(i_k) over `draws` batches.
struct EstimatorStats {
  std::vector<double> mean;
  std::vector<double> stderr_;
  double mean_sq_norm = 0.0;     // empirical E ||estimator||^2
  double sq_norm_stderr = 0.0;
};

inline EstimatorStats monte_carlo_estimator(const DenseMatrix& grads, std::span<const double> probs,
                                            const std::function<std::size_t(RandomStream&)>& draw, std::size_t b,
                                            std::size_t draws, bool importance, RandomStream& rng) {
  const std::size_t n = grads.rows();
  const std::size_t np = grads.cols();
  if (probs.size() != n) throw ContractError("monte_carlo_estimator: distribution size differs from n");
  for (double p : probs)
    if (!(p > 0.0)) throw ContractError("monte_carlo_estimator: degenerate distribution (zero probability)");
  if (b == 0 || draws < 2) throw ContractError("monte_carlo_estimator: need b >= 1 and at least 2 draws");
  std::vector<double> sum(np, 0.0), sumsq(np, 0.0), est(np);
  double nsum = 0.0, nsumsq = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t t = 0; t < draws; ++t) {
    std::fill(est.begin(), est.end(), 0.0);
    for (std::size_t k = 0; k < b; ++k) {
      const std::size_t i = draw(rng);
      const double s = inv_b * (importance ? 1.0 / (static_cast<double>(n) * probs[i]) : 1.0);
      auto g = grads.row(i);
      for (std::size_t c = 0; c < np; ++c) est[c] += s * g[c];
    }
    double sq = 0.0;
    for (std::size_t c = 0; c < np; ++c) {
      sum[c] += est[c];
      sumsq[c] += est[c] * est[c];
      sq += est[c] * est[c];
    }
    nsum += sq;
    nsumsq += sq * sq;
  }
  const double m = static_cast<double>(draws);
  EstimatorStats st;
  st.mean.resize(np);
  st.stderr_.resize(np);
  for (std::size_t c = 0; c < np; ++c) {
    st.mean[c] = sum[c] / m;
    const double var = std::max(0.0, (sumsq[c] - m * st.mean[c] * st.mean[c]) / (m - 1.0));
    st.stderr_[c] = std::sqrt(var / m);
  }
  st.mean_sq_norm = nsum / m;
  st.sq_norm_stderr = std::sqrt(std::max(0.0, (nsumsq - m * st.mean_sq_norm * st.mean_sq_norm) / (m - 1.0)) / m);
  return st;
}

// ---------------------------------------------------------------------------
// Unbiasedness
// ---------------------------------------------------------------------------

struct UnbiasednessConfig {
  LemmaInstanceConfig instance;
  std::size_t batch = 4;
  std::size_t draws = 200000;
  double z_limit = 4.0;        // per-coordinate |mean - G| <= z_limit * stderr
  double rel_limit = 0.01;     // ||mean - G|| / ||G|| < rel_limit
};

struct UnbiasednessCheck {
  double max_z = 0.0;
  double rel_dev = 0.0;
  bool within(const UnbiasednessConfig& c) const { return max_z <= c.z_limit && rel_dev < c.rel_limit; }
};

inline UnbiasednessCheck compare_to_full_gradient(const EstimatorStats& st, std::span<const double> g) {
  UnbiasednessCheck r;
  double diff = 0.0, norm = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double dev = std::abs(st.mean[c] - g[c]);
    diff += dev * dev;
    norm += g[c] * g[c];
    if (st.stderr_[c] > 0.0) r.max_z = std::max(r.max_z, dev / st.stderr_[c]);
    else if (dev > 0.0) r.max_z = std::numeric_limits<double>::infinity();
  }
  r.rel_dev = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
  return r;
}

/// Importance-weighted batch gradient under the two-stage D2ACE sampler
/// against the exact full gradient. The control drops the 1/(nP) factor and
/// must be rejected by the same test.
inline LemmaReport verify_unbiasedness(const UnbiasednessConfig& cfg, std::uint64_t seed = 0) {
  detail::Stopwatch clock;
  const auto inst = make_lemma_instance(cfg.instance, seed);
  const MixtureSampler sampler(inst.pu, inst.ph, inst.p_beta);
  const auto draw = [&](RandomStream& r) { return sampler.draw(r); };

  RandomStream rng(seed, {0, 0, 0, purpose::kMonteCarlo});
  const auto pos = compare_to_full_gradient(
      monte_carlo_estimator(inst.per_instance_grad, inst.marginal.probs, draw, cfg.batch, cfg.draws, true, rng),
      inst.full_grad);
  RandomStream rng_ctl(seed, {1, 0, 0, purpose::kMonteCarlo});
  const auto neg = compare_to_full_gradient(
      monte_carlo_estimator(inst.per_instance_grad, inst.marginal.probs, draw, cfg.batch, cfg.draws, false, rng_ctl),
      inst.full_grad);

  LemmaReport rep{"lemma2_unbiasedness", cfg.draws};
  // one normalized number: > 1 means one of the two limits is exceeded
  auto violation = [&](const UnbiasednessCheck& c) { return std::max(c.max_z / cfg.z_limit, c.rel_dev / cfg.rel_limit); };
  rep.max_violation = detail::json_safe(violation(pos));
  rep.tolerance = 1.0;
  rep.has_control = true;
  rep.control_violation = detail::json_safe(violation(neg));
  rep.control_detected = !neg.within(cfg);
  rep.passed = pos.within(cfg) && rep.control_detected;
  const auto [pmin, pmax] = std::minmax_element(inst.marginal.probs.begin(), inst.marginal.probs.end());
  rep.details = {{"n", inst.n()},
                 {"q", cfg.instance.q},
                 {"b", cfg.batch},
                 {"parameters", inst.full_grad.size()},
                 {"max_z", detail::json_safe(pos.max_z)},
                 {"relative_deviation", pos.rel_dev},
                 {"control_max_z", detail::json_safe(neg.max_z)},
                 {"control_relative_deviation", neg.rel_dev},
                 {"p_min", *pmin},
                 {"p_max", *pmax},
                 {"pressure", inst.pressure},
                 {"p_beta", inst.p_beta}};
  rep.runtime_s = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Bounded second moment
// ---------------------------------------------------------------------------

/// E||G~||^2 = (1/b) sum_i ||g_i||^2 / (n^2 P_i) + ((b-1)/b) ||mean g||^2
/// for b i.i.d. draws.
inline double exact_second_moment(const DenseMatrix& grads, std::span<const double> probs, std::size_t b) {
  const double n = static_cast<double>(grads.rows());
  double first = 0.0;
  std::vector<double> mean(grads.cols(), 0.0);
  for (std::size_t i = 0; i < grads.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < grads.cols(); ++c) {
      sq += grads(i, c) * grads(i, c);
      mean[c] += grads(i, c) / n;
    }
    first += sq / (n * n * probs[i]);
  }
  double msq = 0.0;
  for (double m : mean) msq += m * m;
  const double bb = static_cast<double>(b);
  return first / bb + (bb - 1.0) / bb * msq;
}

struct SecondMomentConfig {
  LemmaInstanceConfig instance;
  std::size_t batch = 4;
  std::size_t draws = 50000;
  std::size_t seeds = 5;
  double stderr_margin = 3.0;
};

/// Empirical E||G~||^2 against G / (n p_min) with G = max_i ||g_i||^2, one
/// Monte Carlo run per seed on the instance built from `seed`.
inline LemmaReport verify_second_moment(const SecondMomentConfig& cfg, std::uint64_t seed = 0) {
  detail::Stopwatch clock;
  const auto inst = make_lemma_instance(cfg.instance, seed);
  const MixtureSampler sampler(inst.pu, inst.ph, inst.p_beta);
  const auto draw = [&](RandomStream& r) { return sampler.draw(r); };
  const auto& probs = inst.marginal.probs;

  double g_max = 0.0;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    double sq = 0.0;
    for (double v : inst.per_instance_grad.row(i)) sq += v * v;
    g_max = std::max(g_max, sq);
  }
  const double p_min = *std::min_element(probs.begin(), probs.end());
  const double bound = g_max / (static_cast<double>(inst.n()) * p_min);
  const double exact = exact_second_moment(inst.per_instance_grad, probs, cfg.batch);

  LemmaReport rep{"lemma3_second_moment", cfg.seeds * cfg.draws};
  rep.tolerance = 0.0;
  rep.max_violation = -std::numeric_limits<double>::max();
  nlohmann::json runs = nlohmann::json::array();
  bool ok = exact <= bound;
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    RandomStream rng(seed, {s, 0, 0, purpose::kMonteCarlo});
    const auto st = monte_carlo_estimator(inst.per_instance_grad, probs, draw, cfg.batch, cfg.draws, true, rng);
    // relative excess over the bound after granting the stderr margin
    const double excess = (st.mean_sq_norm - cfg.stderr_margin * st.sq_norm_stderr - bound) / bound;
    rep.max_violation = std::max(rep.max_violation, excess);
    ok = ok && excess <= rep.tolerance;
    runs.push_back({{"seed", s},
                    {"empirical", st.mean_sq_norm},
                    {"stderr", st.sq_norm_stderr},
                    {"z_vs_exact", (st.mean_sq_norm - exact) / std::max(st.sq_norm_stderr, 1e-300)}});
  }
  rep.passed = ok;
  rep.details = {{"G", g_max},
                 {"p_min", p_min},
                 {"n", inst.n()},
                 {"b", cfg.batch},
                 {"bound", bound},
                 {"exact_second_moment", exact},
                 {"runs", runs}};
  rep.runtime_s = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Global-correlation degeneracy
// ---------------------------------------------------------------------------

inline constexpr double kDegeneracyTol = 1e-10;

/// Brute-force double sum w_i = sum_j sum_k U_ij C_jk.
inline std::vector<double> double_sum_oracle(const DenseMatrix& u, const DenseMatrix& c) {
  std::vector<double> w(u.rows(), 0.0);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < u.cols(); ++j)
      for (std::size_t k = 0; k < u.cols(); ++k) w[i] += u(i, j) * c(j, k);
  return w;
}

/// Correlation enhancement with the mask off and every label visible to
/// every instance.
inline std::vector<double> unmasked_global_enhancement(const DenseMatrix& u, const DenseMatrix& c) {
  const auto ones = SparseBinaryMatrix::ones(u.rows(), u.cols());
  return correlation_enhance(masked_metric(u, ones), ones, c);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline LemmaReport verify_mlunc_degeneracy(std::size_t instances, std::uint64_t seed = 0) {
  detail::Stopwatch clock;
  RandomStream rng(seed, {0, 0, 0, purpose::kFuzz});
  LemmaReport rep{"mlunc_degeneracy", instances};
  rep.tolerance = kDegeneracyTol;
  rep.has_control = true;
  rep.control_violation = std::numeric_limits<double>::max();
  std::size_t detected = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.below(30));
    const std::size_t q = 2 + static_cast<std::size_t>(rng.below(15));
    DenseMatrix u(n, q);
    for (double& v : u.data()) v = rng.uniform();
    DenseMatrix c(q, q);
    for (std::size_t j = 0; j < q; ++j) {
      c(j, j) = 1.0;
      for (std::size_t k = j + 1; k < q; ++k) c(j, k) = c(k, j) = rng.uniform();
    }
    const auto phi = unmasked_global_enhancement(u, c);
    rep.max_violation = std::max(rep.max_violation, max_abs_diff(phi, double_sum_oracle(u, c)));
    rep.max_violation = std::max(rep.max_violation, max_abs_diff(phi, mlunc_degenerate_weights(u, c)));

    // control: break symmetry of one off-diagonal pair
    DenseMatrix a = c;
    const std::size_t j = static_cast<std::size_t>(rng.below(q));
    std::size_t k = static_cast<std::size_t>(rng.below(q - 1));
    if (k >= j) ++k;
    a(j, k) += 0.5 + rng.uniform();
    const double gap = max_abs_diff(unmasked_global_enhancement(u, a), double_sum_oracle(u, a));
    rep.control_violation = std::min(rep.control_violation, gap);
    if (gap > kDegeneracyTol) ++detected;
  }
  rep.control_detected = detected == instances;
  rep.passed = rep.max_violation <= rep.tolerance && rep.control_detected;
  rep.details = {{"controls_detected", detected}};
  rep.runtime_s = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Sparse scaling
// ---------------------------------------------------------------------------

struct ScalingConfig {
  std::size_t n = 1000;
  std::vector<std::size_t> label_counts{32, 64, 128, 256, 512};
  std::size_t labels_per_row = 3;   // nnz(Y) = n * labels_per_row at every q
  std::size_t neighbors = 5;
  double min_exponent_gap = 0.8;
  double min_seconds = 0.02;        // repeat each timing until this much time accrues
  std::size_t equality_instances = 100;
};

/// Least-squares slope of log(y) on log(x).
inline double fitted_exponent(std::span<const double> x, std::span<const double> y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct ScalingInstance {
  DenseMatrix metric;
  SparseBinaryMatrix labels;
  SparseBinaryMatrix local;
};

inline ScalingInstance make_scaling_instance(std::size_t n, std::size_t q, std::size_t per_row, std::size_t k,
                                             RandomStream& rng) {
  ScalingInstance s;
  s.metric = DenseMatrix(n, q);
  for (double& v : s.metric.data()) v = rng.uniform();
  std::vector<SparseBinaryMatrix::Row> rows(n);
  for (auto& r : rows) {
    while (r.size() < std::min(per_row, q)) {
      const std::size_t j = static_cast<std::size_t>(rng.below(q));
      if (std::find(r.begin(), r.end(), j) == r.end()) r.push_back(j);
    }
    std::sort(r.begin(), r.end());
  }
  s.labels = SparseBinaryMatrix(q, std::move(rows));
  NeighborTable nb;
  nb.k = std::min(k, n - 1);
  nb.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    while (nb.neighbors[i].size() < nb.k) {
      const std::size_t m = static_cast<std::size_t>(rng.below(n));
      if (m != i && std::find(nb.neighbors[i].begin(), nb.neighbors[i].end(), m) == nb.neighbors[i].end())
        nb.neighbors[i].push_back(m);
    }
  s.local = local_appearance(s.labels, nb);
  return s;
}

namespace detail {

template <class F>
double time_per_call(F&& f, double min_seconds) {
  double best = std::numeric_limits<double>::max();
  for (int rep = 0; rep < 3; ++rep) {
    Stopwatch clock;
    std::size_t calls = 0;
    do {
      f();
      ++calls;
    } while (clock.seconds() < min_seconds);
    best = std::min(best, clock.seconds() / static_cast<double>(calls));
  }
  return best;
}

}  // namespace detail

/// Dense-vs-sparse R equality on random instances, then per-epoch weighting
/// time at growing q with nnz(Y) fixed. The dense comparison path is the
/// global-correlation product rowsum(U C) with a full q x q C.
inline LemmaReport verify_sparse_scaling(const ScalingConfig& cfg, std::uint64_t seed = 0) {
  detail::Stopwatch clock;
  RandomStream rng(seed, {0, 0, 0, purpose::kSynthetic});
  LemmaReport rep{"sparse_scaling", cfg.equality_instances + cfg.label_counts.size()};
  rep.tolerance = kDegeneracyTol;

  double max_r_diff = 0.0;
  for (std::size_t t = 0; t < cfg.equality_instances; ++t) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.below(40));
    const std::size_t q = 2 + static_cast<std::size_t>(rng.below(20));
    const std::size_t per_row = 1 + static_cast<std::size_t>(rng.below(q));
    const auto inst = make_scaling_instance(n, q, per_row, 1 + rng.below(n - 1), rng);
    const auto m = masked_metric(inst.metric, inst.labels);
    const auto sparse_r = correlation_enhanced_entries(m, inst.local, cosine_correlation_sparse(m)).denseify();
    // dense oracle: M (.) (Z C) with plain dense products
    const auto dm = m.denseify();
    const auto zc = matmul(inst.local.denseify(), cosine_correlation(m));
    max_r_diff = std::max(max_r_diff, max_abs_diff(sparse_r, hadamard(dm, zc)));
    const auto ws = compute_instance_weights(inst.metric, inst.labels, inst.local, {true, true});
    const auto wd = compute_instance_weights(inst.metric, inst.labels, inst.local, {true, false});
    max_r_diff = std::max(max_r_diff, max_abs_diff(ws.raw, wd.raw));
  }

  std::vector<double> qs, sparse_t, dense_t;
  nlohmann::json sizes = nlohmann::json::array();
  for (std::size_t q : cfg.label_counts) {
    const auto inst = make_scaling_instance(cfg.n, q, cfg.labels_per_row, cfg.neighbors, rng);
    std::vector<double> sink;
    const double ts = detail::time_per_call(
        [&] { sink = compute_instance_weights(inst.metric, inst.labels, inst.local).raw; }, cfg.min_seconds);
    DenseMatrix c(q, q);
    for (double& v : c.data()) v = rng.uniform();
    const double td = detail::time_per_call([&] { sink = row_sums(matmul(inst.metric, c)); }, cfg.min_seconds);
    qs.push_back(static_cast<double>(q));
    sparse_t.push_back(ts);
    dense_t.push_back(td);
    sizes.push_back({{"q", q}, {"sparse_s", ts}, {"dense_s", td}});
  }
  const double es = fitted_exponent(qs, sparse_t);
  const double ed = fitted_exponent(qs, dense_t);

  // empty label matrix: the sparse path should barely move with q
  nlohmann::json empty = nlohmann::json::array();
  for (std::size_t q : {cfg.label_counts.front(), cfg.label_counts.back()}) {
    auto inst = make_scaling_instance(cfg.n, q, 0, cfg.neighbors, rng);
    const auto m = masked_metric(inst.metric, inst.labels);
    std::vector<double> sink;
    const double ts = detail::time_per_call(
        [&] { sink = correlation_enhance(m, inst.local, cosine_correlation_sparse(m)); }, cfg.min_seconds);
    empty.push_back({{"q", q}, {"sparse_enhance_s", ts}});
  }

  rep.max_violation = max_r_diff;
  rep.passed = max_r_diff <= rep.tolerance && ed - es >= cfg.min_exponent_gap;
  rep.details = {{"n", cfg.n},
                 {"nnz_y", cfg.n * cfg.labels_per_row},
                 {"sparse_exponent", es},
                 {"dense_exponent", ed},
                 {"exponent_gap", ed - es},
                 {"min_exponent_gap", cfg.min_exponent_gap},
                 {"max_path_difference", max_r_diff},
                 {"sizes", sizes},
                 {"empty_labels", empty}};
  rep.runtime_s = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Step-size conditions (report only)
// ---------------------------------------------------------------------------

/// Checks that the learning-rate schedule is positive, bounded and
/// non-increasing after warm-up, which covers the constant-step case.
inline nlohmann::json stepsize_report(const LrSchedule& lr, std::size_t total_epochs) {
  double max_lr = 0.0, min_lr = std::numeric_limits<double>::max();
  bool positive = true, non_increasing_after_warmup = true;
  for (std::size_t t = 1; t <= total_epochs; ++t) {
    const double a = lr.at(t);
    positive = positive && a > 0.0;
    max_lr = std::max(max_lr, a);
    min_lr = std::min(min_lr, a);
    if (t > lr.warmup_epochs && t > 1 && a > lr.at(t - 1) * (1.0 + 1e-15)) non_increasing_after_warmup = false;
  }
  return {{"base_lr", lr.base_lr},
          {"warmup_epochs", lr.warmup_epochs},
          {"min_lr", min_lr},
          {"max_lr", max_lr},
          {"positive", positive},
          {"almost_non_increasing", non_increasing_after_warmup}};
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

struct VerifyConfig {
  std::uint64_t seed = 0;
  std::size_t fuzz_count = 1000;
  UnbiasednessConfig unbiasedness;
  SecondMomentConfig second_moment;
  std::size_t degeneracy_instances = 50;
  ScalingConfig scaling;
  LrSchedule lr;
  std::size_t total_epochs = 100;
};

struct VerifySuite {
  std::vector<LemmaReport> reports;
  nlohmann::json stepsize;

  bool all_passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const LemmaReport& r) { return r.passed; });
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"all_passed", all_passed()}, {"stepsize", stepsize}};
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports) j["reports"].push_back(d2ace::to_json(r));
    return j;
  }
};

inline VerifySuite run_verify_suite(const VerifyConfig& cfg) {
  VerifySuite s;
  s.reports.push_back(verify_positivity(cfg.fuzz_count, cfg.seed));
  s.reports.push_back(verify_unbiasedness(cfg.unbiasedness, cfg.seed));
  s.reports.push_back(verify_second_moment(cfg.second_moment, cfg.seed));
  s.reports.push_back(verify_mlunc_degeneracy(cfg.degeneracy_instances, cfg.seed));
  s.reports.push_back(verify_sparse_scaling(cfg.scaling, cfg.seed));
  s.stepsize = stepsize_report(cfg.lr, cfg.total_epochs);
  return s;
}

}  // namespace d2ace
