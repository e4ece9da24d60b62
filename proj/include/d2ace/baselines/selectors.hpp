#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"
#include "d2ace/sampling/sampling.hpp"
#include "d2ace/tracking/tracking.hpp"
#include "d2ace/weighting/weighting.hpp"

namespace d2ace {

enum class SelectorKind { Random, Active, Recent, DIHCL, Balance, HardImb, MLUnc, D2ACE };

inline constexpr SelectorKind kAllSelectors[] = {SelectorKind::Random,  SelectorKind::Active,  SelectorKind::Recent,
                                                 SelectorKind::DIHCL,   SelectorKind::Balance, SelectorKind::HardImb,
                                                 SelectorKind::MLUnc,   SelectorKind::D2ACE};

inline std::string_view to_string(SelectorKind k) {
  switch (k) {
    case SelectorKind::Random: return "Random";
    case SelectorKind::Active: return "Active";
    case SelectorKind::Recent: return "Recent";
    case SelectorKind::DIHCL: return "DIHCL";
    case SelectorKind::Balance: return "Balance";
    case SelectorKind::HardImb: return "Hard-Imb";
    case SelectorKind::MLUnc: return "ML-Unc";
    case SelectorKind::D2ACE: return "D2ACE";
  }
  return "?";
}

inline SelectorKind selector_kind_from_string(std::string_view s) {
  std::string low;
  for (char c : s)
    if (c != '-' && c != '_') low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (auto k : kAllSelectors) {
    std::string name;
    for (char c : to_string(k))
      if (c != '-') name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (name == low) return k;
  }
  throw ConfigError("unknown selector '" + std::string(s) + "'");
}

/// Hyperparameters for every selector kind; each kind reads its own subset.
struct SelectorConfig {
  SelectorKind kind = SelectorKind::D2ACE;
  std::size_t window = 5;          // n_t (Recent, ML-Unc, D2ACE)
  double lambda1 = 0.5;            // ML-Unc, D2ACE
  double lambda2 = 0.7;            // D2ACE
  double threshold = 0.5;          // probability -> relevance
  std::size_t neighbors = 5;       // K (Hard-Imb, D2ACE)
  double gamma = 0.95;             // DIHCL discount
  double exp3_eta = 1.0;           // DIHCL softmax temperature inverse
  double exp3_eps = 0.05;          // DIHCL uniform floor
  double active_c = 0.1;           // Active confidence half-width constant
  std::size_t balance_candidates = 32;
  bool mask = true;                // D2ACE relevance filtering
  bool sparse_path = true;         // D2ACE sparse correlation
  bool with_replacement = true;    // i.i.d. draws within a batch

  void validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (lambda1 < 0.0 || lambda1 > 1.0) throw ConfigError("lambda1 must be in [0,1]");
    if (lambda2 <= 0.0 || lambda2 > 1.0) throw ConfigError("lambda2 must be in (0,1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0,1]");
    if (exp3_eps < 0.0 || exp3_eps > 1.0) throw ConfigError("exp3_eps must be in [0,1]");
    if (balance_candidates < 1) throw ConfigError("balance_candidates must be >= 1");
    if (neighbors < 1) throw ConfigError("neighbors must be >= 1");
  }
};

inline nlohmann::json to_json(const SelectorConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"window", c.window},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"threshold", c.threshold},
          {"neighbors", c.neighbors},
          {"gamma", c.gamma},
          {"exp3_eta", c.exp3_eta},
          {"exp3_eps", c.exp3_eps},
          {"active_c", c.active_c},
          {"balance_candidates", c.balance_candidates},
          {"mask", c.mask},
          {"sparse_path", c.sparse_path},
          {"with_replacement", c.with_replacement}};
}

/// Frozen view of the training set at the start of an epoch.
struct EpochSnapshot {
  std::size_t epoch = 0;          // 1-based
  const DenseMatrix* probs = nullptr;  // n x q predictions of the current model
  const DenseMatrix* loss = nullptr;   // n x q per-label BCE
};

struct EpochPlan {
  std::vector<std::vector<std::size_t>> batches;
  /// Marginal draw distribution when batches were drawn i.i.d.; absent for
  /// permutation-style epochs.
  std::optional<SamplingDistribution> distribution;
  bool warmup = false;
  double pressure = std::numeric_limits<double>::quiet_NaN();
  double p_beta = std::numeric_limits<double>::quiet_NaN();
};

/// Shared, read-only inputs for all selectors of one run.
struct SelectorContext {
  const SparseBinaryMatrix* labels = nullptr;
  const NeighborTable* neighbors = nullptr;  // required by Hard-Imb and D2ACE
  std::size_t batch_size = 128;
  SamplingSchedule schedule;
};

/// Shuffles 0..n-1 and chunks it into ceil(n/b) batches.
inline std::vector<std::vector<std::size_t>> random_batches(std::size_t n, std::size_t b, RandomStream& rng) {
  if (b == 0) throw ConfigError("batch size must be >= 1");
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += b)
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(s),
                     perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + b)));
  return out;
}

/// Epoch-level batch selection policy. observe() is called at the start of
/// every epoch (warm-up included) before plan().
class Selector {
 public:
  Selector(SelectorConfig cfg, SelectorContext ctx) : cfg_(cfg), ctx_(ctx) {
    cfg_.validate();
    ctx_.schedule.validate();
    if (!ctx_.labels) throw ConfigError("selector context needs the training label matrix");
    if (ctx_.batch_size == 0) throw ConfigError("batch size must be >= 1");
  }
  virtual ~Selector() = default;

  const SelectorConfig& config() const noexcept { return cfg_; }
  std::size_t n() const noexcept { return ctx_.labels->rows(); }
  std::size_t q() const noexcept { return ctx_.labels->cols(); }

  virtual void observe(const EpochSnapshot&) {}

  EpochPlan plan(std::size_t epoch, RandomStream& rng) {
    if (cfg_.kind == SelectorKind::Random || epoch <= ctx_.schedule.warmup_epochs) {
      EpochPlan p;
      p.batches = random_batches(n(), ctx_.batch_size, rng);
      p.warmup = cfg_.kind != SelectorKind::Random;
      return p;
    }
    return plan_selected(epoch, rng);
  }

 protected:
  virtual EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) = 0;

  /// ceil(n/b) batches drawn from `dist`.
  EpochPlan draw_plan(SamplingDistribution dist, RandomStream& rng) const {
    EpochPlan p;
    const std::size_t nb = batches_per_epoch(n(), ctx_.batch_size);
    const std::size_t b = std::min(ctx_.batch_size, n());
    for (std::size_t k = 0; k < nb; ++k)
      p.batches.push_back(cfg_.with_replacement ? draw_batch(dist, b, rng)
                                                : draw_batch_without_replacement(dist, b, rng));
    p.distribution = std::move(dist);
    return p;
  }

  /// Raw weights -> min-max -> quantized distribution at this epoch's pressure.
  EpochPlan quantized_plan(std::span<const double> raw, std::size_t epoch, RandomStream& rng) const {
    const double s = selection_pressure(epoch, ctx_.schedule);
    auto p = draw_plan(quantized_distribution(minmax_normalize(raw), s), rng);
    p.pressure = s;
    return p;
  }

  void require_observed(bool ok) const {
    if (!ok) throw ContractError(std::string(to_string(cfg_.kind)) + ": plan() before any observe()");
  }

  SelectorConfig cfg_;
  SelectorContext ctx_;
};

// ---------------------------------------------------------------------------

class RandomSelector final : public Selector {
 public:
  using Selector::Selector;

 protected:
  EpochPlan plan_selected(std::size_t, RandomStream&) override { throw ContractError("unreachable"); }
};

/// Prediction variance over the full history plus a confidence half-width
/// active_c / sqrt(t); instance weight is the row sum.
class ActiveSelector final : public Selector {
 public:
  ActiveSelector(SelectorConfig cfg, SelectorContext ctx)
      : Selector(cfg, ctx), sum_(n(), q()), sumsq_(n(), q()) {}

  void observe(const EpochSnapshot& s) override {
    for (std::size_t k = 0; k < sum_.size(); ++k) {
      const double p = s.probs->data()[k];
      sum_.data()[k] += p;
      sumsq_.data()[k] += p * p;
    }
    ++count_;
  }

  /// Per-instance weights from the history seen so far.
  std::vector<double> weights() const {
    require_observed(count_ > 0);
    const double t = static_cast<double>(count_);
    const double half_width = cfg_.active_c / std::sqrt(t);
    std::vector<double> w(n(), 0.0);
    for (std::size_t i = 0; i < n(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < q(); ++j) {
        const double mean = sum_(i, j) / t;
        const double var = std::max(0.0, sumsq_(i, j) / t - mean * mean);
        acc += var + half_width;
      }
      w[i] = acc;
    }
    return w;
  }

 protected:
  EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) override {
    return quantized_plan(weights(), epoch, rng);
  }

 private:
  DenseMatrix sum_, sumsq_;
  std::size_t count_ = 0;
};

/// Entropy (bits) of the empirical relevance frequency over the last n_t
/// thresholded predictions; instance weight is the row sum.
class RecentSelector final : public Selector {
 public:
  RecentSelector(SelectorConfig cfg, SelectorContext ctx) : Selector(cfg, ctx) {}

  void observe(const EpochSnapshot& s) override {
    DenseMatrix t(n(), q());
    for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = s.probs->data()[k] >= cfg_.threshold ? 1.0 : 0.0;
    window_.push_back(std::move(t));
    if (window_.size() > cfg_.window) window_.pop_front();
  }

  std::vector<double> weights() const {
    require_observed(!window_.empty());
    std::vector<double> w(n(), 0.0);
    const double m = static_cast<double>(window_.size());
    for (std::size_t i = 0; i < n(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < q(); ++j) {
        double ones = 0.0;
        for (const auto& t : window_) ones += t(i, j);
        acc += frequency_entropy(ones / m);
      }
      w[i] = acc;
    }
    return w;
  }

  static double frequency_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
  }

 protected:
  EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) override {
    return quantized_plan(weights(), epoch, rng);
  }

 private:
  std::deque<DenseMatrix> window_;
};

/// Discounted cumulative loss change r_i <- gamma * r_i + |l_i^t - l_i^{t-1}|
/// (instance loss summed over labels), sampled by an Exp3-style softmax with
/// a uniform floor.
class DihclSelector final : public Selector {
 public:
  DihclSelector(SelectorConfig cfg, SelectorContext ctx) : Selector(cfg, ctx), reward_(n(), 0.0) {}

  void observe(const EpochSnapshot& s) override {
    const auto loss = row_sums(*s.loss);
    if (!prev_loss_.empty())
      for (std::size_t i = 0; i < n(); ++i)
        reward_[i] = cfg_.gamma * reward_[i] + std::abs(loss[i] - prev_loss_[i]);
    prev_loss_ = loss;
  }

  const std::vector<double>& rewards() const noexcept { return reward_; }

  SamplingDistribution distribution() const {
    require_observed(!prev_loss_.empty());
    const double top = *std::max_element(reward_.begin(), reward_.end());
    std::vector<double> p(n());
    double z = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      p[i] = std::exp(cfg_.exp3_eta * (reward_[i] - top));
      z += p[i];
    }
    const double floor = cfg_.exp3_eps / static_cast<double>(n());
    for (auto& v : p) v = (1.0 - cfg_.exp3_eps) * v / z + floor;
    return {std::move(p), {}};
  }

 protected:
  EpochPlan plan_selected(std::size_t, RandomStream& rng) override { return draw_plan(distribution(), rng); }

 private:
  std::vector<double> reward_;
  std::vector<double> prev_loss_;
};

/// Builds each batch greedily from the epoch's unused instances so that
/// sum_j |pos_j - neg_j| of the batch stays small. Candidates come from the
/// rng; when none improves the balance a random candidate is taken.
class BalanceSelector final : public Selector {
 public:
  BalanceSelector(SelectorConfig cfg, SelectorContext ctx) : Selector(cfg, ctx) {}

  std::vector<std::vector<std::size_t>> balanced_batches(RandomStream& rng) const {
    const auto& y = *ctx_.labels;
    std::vector<std::size_t> pool = rng.permutation(n());
    std::vector<std::vector<std::size_t>> out;
    std::vector<long> diff(q());  // pos - neg per label within the batch
    while (!pool.empty()) {
      std::fill(diff.begin(), diff.end(), 0);
      long imbalance = 0;
      std::vector<std::size_t> batch;
      while (batch.size() < ctx_.batch_size && !pool.empty()) {
        const std::size_t m = std::min(cfg_.balance_candidates, pool.size());
        // partial Fisher-Yates: candidates land in pool[0..m)
        for (std::size_t c = 0; c < m; ++c) std::swap(pool[c], pool[c + rng.below(pool.size() - c)]);
        std::size_t best = 0;
        long best_score = std::numeric_limits<long>::max();
        for (std::size_t c = 0; c < m; ++c) {
          const long s = imbalance_after(y, diff, pool[c]);
          if (s < best_score) {
            best_score = s;
            best = c;
          }
        }
        if (best_score >= imbalance) best = static_cast<std::size_t>(rng.below(m));
        const std::size_t pick = pool[best];
        pool[best] = pool.back();
        pool.pop_back();
        add(y, diff, pick);
        imbalance = 0;
        for (long d : diff) imbalance += std::abs(d);
        batch.push_back(pick);
      }
      out.push_back(std::move(batch));
    }
    return out;
  }

 protected:
  EpochPlan plan_selected(std::size_t, RandomStream& rng) override {
    EpochPlan p;
    p.batches = balanced_batches(rng);
    return p;
  }

 private:
  static long imbalance_after(const SparseBinaryMatrix& y, const std::vector<long>& diff, std::size_t i) {
    long s = 0;
    auto row = y.row(i);
    std::size_t next = 0;
    for (std::size_t j = 0; j < diff.size(); ++j) {
      const bool pos = next < row.size() && row[next] == j;
      if (pos) ++next;
      s += std::abs(diff[j] + (pos ? 1 : -1));
    }
    return s;
  }

  static void add(const SparseBinaryMatrix& y, std::vector<long>& diff, std::size_t i) {
    for (auto& d : diff) --d;
    for (std::size_t j : y.row(i)) diff[j] += 2;
  }
};

/// Static class-imbalance-aware weights times the current per-label loss.
///
/// static_ij = 0.5 * g_ij + 0.5 * (1 + l_ij) where g_ij is the ratio of the
/// majority-class count of label j to the count of y_ij's class (1 when the
/// label is balanced) and l_ij is the fraction of i's K neighbours whose
/// y_mj differs from y_ij. A balanced label in a homogeneous neighbourhood
/// gets exactly 1.
class HardImbSelector final : public Selector {
 public:
  HardImbSelector(SelectorConfig cfg, SelectorContext ctx) : Selector(cfg, ctx), static_(n(), q()) {
    if (!ctx_.neighbors) throw ConfigError("Hard-Imb needs a neighbor table");
    static_ = static_weights(*ctx_.labels, *ctx_.neighbors);
  }

  static DenseMatrix static_weights(const SparseBinaryMatrix& y, const NeighborTable& nb) {
    detail::require_shape(nb.size() == y.rows(), "HardImb", "neighbor table rows != label rows");
    const std::size_t n = y.rows();
    const std::size_t q = y.cols();
    const auto pos = y.column_counts();
    const auto dense = y.denseify();
    DenseMatrix w(n, q);
    for (std::size_t j = 0; j < q; ++j) {
      const double np = static_cast<double>(pos[j]);
      const double nn = static_cast<double>(n - pos[j]);
      const double major = std::max(np, nn);
      for (std::size_t i = 0; i < n; ++i) {
        const bool yi = dense(i, j) != 0.0;
        const double own = yi ? np : nn;  // >= 1, since i itself is counted
        const double g = major / own;
        double disagree = 0.0;
        for (std::size_t m : nb.neighbors[i]) disagree += (dense(m, j) != 0.0) != yi ? 1.0 : 0.0;
        const double l = nb.k ? disagree / static_cast<double>(nb.k) : 0.0;
        w(i, j) = 0.5 * g + 0.5 * (1.0 + l);
      }
    }
    return w;
  }

  const DenseMatrix& static_matrix() const noexcept { return static_; }

  void observe(const EpochSnapshot& s) override { loss_ = *s.loss; }

  std::vector<double> weights() const {
    require_observed(!loss_.empty());
    return row_sums(hadamard(static_, loss_));
  }

 protected:
  EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) override {
    return quantized_plan(weights(), epoch, rng);
  }

 private:
  DenseMatrix static_;
  DenseMatrix loss_;
};

/// Label correlation from pairwise mutual information of thresholded
/// prediction columns. The 2x2 contingency tables get add-one smoothing and
/// MI is divided by the smaller of the two (smoothed) marginal entropies.
/// Diagonal is 1; the result is symmetric with entries in [0, 1].
inline DenseMatrix mutual_information_correlation(const DenseMatrix& binary) {
  const std::size_t n = binary.rows();
  const std::size_t q = binary.cols();
  std::vector<double> ones(q, 0.0);
  DenseMatrix both(q, q);  // co-occurrence of ones
  for (std::size_t i = 0; i < n; ++i) {
    auto r = binary.row(i);
    for (std::size_t j = 0; j < q; ++j) {
      if (r[j] == 0.0) continue;
      ones[j] += 1.0;
      for (std::size_t k = 0; k < q; ++k)
        if (r[k] != 0.0) both(j, k) += 1.0;
    }
  }
  const double total = static_cast<double>(n) + 4.0;
  auto h = [](double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -(p * std::log(p) + (1 - p) * std::log(1 - p)); };
  DenseMatrix c(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    c(j, j) = 1.0;
    for (std::size_t k = j + 1; k < q; ++k) {
      const double n11 = both(j, k) + 1.0;
      const double n10 = ones[j] - both(j, k) + 1.0;
      const double n01 = ones[k] - both(j, k) + 1.0;
      const double n00 = static_cast<double>(n) - ones[j] - ones[k] + both(j, k) + 1.0;
      const double pj = (n11 + n10) / total;
      const double pk = (n11 + n01) / total;
      double mi = 0.0;
      const double cells[4][3] = {{n11, pj, pk}, {n10, pj, 1 - pk}, {n01, 1 - pj, pk}, {n00, 1 - pj, 1 - pk}};
      for (const auto& cell : cells) {
        const double pjk = cell[0] / total;
        mi += pjk * std::log(pjk / (cell[1] * cell[2]));
      }
      const double denom = std::min(h(pj), h(pk));
      const double v = denom > 0.0 ? std::clamp(mi / denom, 0.0, 1.0) : 0.0;
      c(j, k) = v;
      c(k, j) = v;
    }
  }
  return c;
}

/// Uncertainty U amplified by dense global correlation: w = rowsum(U C_U).
class MLUncSelector final : public Selector {
 public:
  MLUncSelector(SelectorConfig cfg, SelectorContext ctx)
      : Selector(cfg, ctx), history_(n(), q(), {cfg.window, cfg.lambda1, 0.7, cfg.threshold}) {}

  void observe(const EpochSnapshot& s) override { history_.push(*s.probs); }

  const PredictionHistory& history() const noexcept { return history_; }

  DenseMatrix correlation() const {
    require_observed(history_.size() > 0);
    return mutual_information_correlation(history_.thresholded());
  }

  std::vector<double> weights() const {
    require_observed(history_.size() > 0);
    return row_sums(matmul(history_.uncertainty(), correlation()));
  }

 protected:
  EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) override {
    return quantized_plan(weights(), epoch, rng);
  }

 private:
  PredictionHistory history_;
};

/// Uncertainty and hardness weights with dynamic label weighting and local
/// correlation enhancement, sampled from the Bernoulli mixture.
class D2aceSelector final : public Selector {
 public:
  D2aceSelector(SelectorConfig cfg, SelectorContext ctx)
      : Selector(cfg, ctx), history_(n(), q(), {cfg.window, cfg.lambda1, cfg.lambda2, cfg.threshold}) {
    if (!ctx_.neighbors) throw ConfigError("D2ACE needs a neighbor table");
    local_ = local_appearance(*ctx_.labels, *ctx_.neighbors);
  }

  void observe(const EpochSnapshot& s) override {
    history_.push(*s.probs);
    loss_ = *s.loss;
  }

  const PredictionHistory& history() const noexcept { return history_; }
  const SparseBinaryMatrix& local_labels() const noexcept { return local_; }

  struct Weights {
    InstanceWeights uncertainty;
    InstanceWeights hardness;
  };

  Weights weights() const {
    require_observed(history_.size() > 0);
    const auto m = compute_metrics(history_, loss_, history_.epochs_seen());
    const WeightingOptions opt{cfg_.mask, cfg_.sparse_path};
    return {compute_instance_weights(m.uncertainty, *ctx_.labels, local_, opt),
            compute_instance_weights(m.hardness, *ctx_.labels, local_, opt)};
  }

 protected:
  EpochPlan plan_selected(std::size_t epoch, RandomStream& rng) override {
    const auto w = weights();
    const double s = selection_pressure(epoch, ctx_.schedule);
    const double pb = mixing_coefficient(epoch, ctx_.schedule);
    const MixtureSampler sampler(quantized_distribution(w.uncertainty.normalized, s),
                                 quantized_distribution(w.hardness.normalized, s), pb);
    EpochPlan p;
    const std::size_t nb = batches_per_epoch(n(), ctx_.batch_size);
    const std::size_t b = std::min(ctx_.batch_size, n());
    for (std::size_t k = 0; k < nb; ++k)
      p.batches.push_back(cfg_.with_replacement ? sampler.draw_batch(b, rng)
                                                : draw_batch_without_replacement(sampler.marginal(), b, rng));
    p.distribution = sampler.marginal();
    p.pressure = s;
    p.p_beta = pb;
    return p;
  }

 private:
  PredictionHistory history_;
  SparseBinaryMatrix local_;
  DenseMatrix loss_;
};

inline std::unique_ptr<Selector> make_selector(const SelectorConfig& cfg, const SelectorContext& ctx) {
  switch (cfg.kind) {
    case SelectorKind::Random: return std::make_unique<RandomSelector>(cfg, ctx);
    case SelectorKind::Active: return std::make_unique<ActiveSelector>(cfg, ctx);
    case SelectorKind::Recent: return std::make_unique<RecentSelector>(cfg, ctx);
    case SelectorKind::DIHCL: return std::make_unique<DihclSelector>(cfg, ctx);
    case SelectorKind::Balance: return std::make_unique<BalanceSelector>(cfg, ctx);
    case SelectorKind::HardImb: return std::make_unique<HardImbSelector>(cfg, ctx);
    case SelectorKind::MLUnc: return std::make_unique<MLUncSelector>(cfg, ctx);
    case SelectorKind::D2ACE: return std::make_unique<D2aceSelector>(cfg, ctx);
  }
  throw ConfigError("unknown selector kind");
}

inline bool needs_neighbors(SelectorKind k) { return k == SelectorKind::HardImb || k == SelectorKind::D2ACE; }

}  // namespace d2ace
