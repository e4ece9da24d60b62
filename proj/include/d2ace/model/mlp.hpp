#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

namespace d2ace {

/// Probabilities are clamped to [kProbEps, 1 - kProbEps].
inline constexpr double kProbEps = 1e-7;

inline double sigmoid(double z) noexcept {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double clamp_prob(double p) noexcept { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

/// Feed-forward multi-label classifier: ReLU hidden layers, sigmoid outputs.
///
/// All parameters live in one flat vector. Layer l contributes a weight block
/// of shape (in x out), row-major, followed by `out` biases.
class MlpModel {
 public:
  MlpModel() = default;

  /// Zero-initialised parameters.
  explicit MlpModel(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ConfigError("MlpModel needs at least input and output sizes");
    for (auto s : sizes_)
      if (s == 0) throw ConfigError("MlpModel layer size must be positive");
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(off);
      off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(off, 0.0);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  MlpModel(std::vector<std::size_t> layer_sizes, RandomStream& rng) : MlpModel(std::move(layer_sizes)) {
    for (std::size_t l = 0; l < layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in_size(l)));
      for (double& w : weights(l)) w = rng.uniform(-bound, bound);
      for (double& b : biases(l)) b = rng.uniform(-bound, bound);
    }
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t layers() const noexcept { return offsets_.size(); }
  std::size_t in_size(std::size_t l) const noexcept { return sizes_[l]; }
  std::size_t out_size(std::size_t l) const noexcept { return sizes_[l + 1]; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::span<double> weights(std::size_t l) noexcept {
    return {params_.data() + offsets_[l], in_size(l) * out_size(l)};
  }
  std::span<const double> weights(std::size_t l) const noexcept {
    return {params_.data() + offsets_[l], in_size(l) * out_size(l)};
  }
  std::span<double> biases(std::size_t l) noexcept {
    return {params_.data() + offsets_[l] + in_size(l) * out_size(l), out_size(l)};
  }
  std::span<const double> biases(std::size_t l) const noexcept {
    return {params_.data() + offsets_[l] + in_size(l) * out_size(l), out_size(l)};
  }

  /// Post-activation of every layer; acts.front() is the input, acts.back()
  /// the clamped output probabilities.
  std::vector<DenseMatrix> forward_all(const DenseMatrix& x) const {
    detail::require_shape(x.cols() == input_dim(), "MlpModel::forward",
                          "feature cols " + std::to_string(x.cols()) + " != input size " +
                              std::to_string(input_dim()));
    std::vector<DenseMatrix> acts;
    acts.reserve(layers() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < layers(); ++l) {
      const auto& h = acts.back();
      DenseMatrix z(h.rows(), out_size(l));
      const auto w = weights(l);
      const auto b = biases(l);
      const std::size_t out = out_size(l);
      for (std::size_t r = 0; r < h.rows(); ++r) {
        auto zr = z.row(r);
        std::copy(b.begin(), b.end(), zr.begin());
        auto hr = h.row(r);
        for (std::size_t k = 0; k < hr.size(); ++k) {
          const double hk = hr[k];
          if (hk == 0.0) continue;
          const double* wk = w.data() + k * out;
          for (std::size_t o = 0; o < out; ++o) zr[o] += hk * wk[o];
        }
        const bool last = l + 1 == layers();
        for (double& v : zr) v = last ? clamp_prob(sigmoid(v)) : std::max(0.0, v);
      }
      acts.push_back(std::move(z));
    }
    return acts;
  }

  /// n x q probabilities.
  DenseMatrix forward(const DenseMatrix& x) const { return std::move(forward_all(x).back()); }

  std::vector<double>& raw() noexcept { return params_; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Per-instance, per-label binary cross-entropy (natural log).
inline DenseMatrix bce_loss_matrix(const DenseMatrix& probs, const SparseBinaryMatrix& labels) {
  detail::require_shape(probs.rows() == labels.rows() && probs.cols() == labels.cols(), "bce_loss_matrix",
                        "probabilities and labels differ in shape");
  DenseMatrix loss(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t j = 0; j < probs.cols(); ++j) loss(i, j) = -std::log(1.0 - probs(i, j));
    for (std::size_t j : labels.row(i)) loss(i, j) = -std::log(probs(i, j));
  }
  return loss;
}

/// Gradient of  (1/b) * sum_r weight_r * sum_j bce(p_rj, y_rj)  with respect
/// to the flat parameter vector; `loss_out` receives the objective value.
inline std::vector<double> loss_gradient(const MlpModel& model, const DenseMatrix& x,
                                         const SparseBinaryMatrix& y, std::span<const double> weight,
                                         double* loss_out = nullptr) {
  const std::size_t b = x.rows();
  detail::require_shape(y.rows() == b && weight.size() == b, "loss_gradient", "batch sizes differ");
  detail::require_shape(y.cols() == model.output_dim(), "loss_gradient", "label count != output size");
  if (b == 0) throw ContractError("loss_gradient: empty batch");

  const auto acts = model.forward_all(x);
  const auto& p = acts.back();
  std::vector<double> grad(model.parameter_count(), 0.0);

  // dL/dz at the output: weight_r / b * (p - y)
  DenseMatrix delta(b, model.output_dim());
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    const double s = weight[r] * inv_b;
    double lr = 0.0;
    std::size_t next = 0;
    auto yr = y.row(r);
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const bool pos = next < yr.size() && yr[next] == j;
      if (pos) ++next;
      const double pj = p(r, j);
      lr += pos ? -std::log(pj) : -std::log(1.0 - pj);
      delta(r, j) = s * (pj - (pos ? 1.0 : 0.0));
    }
    loss += s * lr;
  }

  const auto base = model.parameters().data();
  for (std::size_t l = model.layers(); l-- > 0;) {
    const auto& h = acts[l];
    const std::size_t in = model.in_size(l);
    const std::size_t out = model.out_size(l);
    const auto w = model.weights(l);
    double* gw = grad.data() + (w.data() - base);
    double* gb = grad.data() + (model.biases(l).data() - base);
    for (std::size_t r = 0; r < b; ++r) {
      auto dr = delta.row(r);
      auto hr = h.row(r);
      for (std::size_t o = 0; o < out; ++o) gb[o] += dr[o];
      for (std::size_t k = 0; k < in; ++k) {
        const double hk = hr[k];
        if (hk == 0.0) continue;
        double* gwk = gw + k * out;
        for (std::size_t o = 0; o < out; ++o) gwk[o] += hk * dr[o];
      }
    }
    if (l == 0) break;
    DenseMatrix prev(b, in);
    for (std::size_t r = 0; r < b; ++r) {
      auto dr = delta.row(r);
      auto hr = h.row(r);
      auto pr = prev.row(r);
      for (std::size_t k = 0; k < in; ++k) {
        if (hr[k] <= 0.0) continue;  // ReLU gate
        const double* wk = w.data() + k * out;
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += wk[o] * dr[o];
        pr[k] = s;
      }
    }
    delta = std::move(prev);
  }
  if (loss_out) *loss_out = loss;
  return grad;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Adam with L2 weight decay folded into the gradient.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg)
      : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}

  void apply(std::span<double> params, std::span<const double> grad, double lr) {
    detail::require_shape(params.size() == first_moment.size() && grad.size() == params.size(),
                          "AdamState::apply", "parameter count differs from optimizer state");
    ++step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double g = grad[k] + config.weight_decay * params[k];
      first_moment[k] = config.beta1 * first_moment[k] + (1.0 - config.beta1) * g;
      second_moment[k] = config.beta2 * second_moment[k] + (1.0 - config.beta2) * g * g;
      const double mhat = first_moment[k] / c1;
      const double vhat = second_moment[k] / c2;
      params[k] -= lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Linear warm-up over the first `warmup_epochs` epochs, constant after.
struct LrSchedule {
  double base_lr = 1e-4;
  std::size_t warmup_epochs = 10;

  /// Epochs count from 1.
  double at(std::size_t epoch) const noexcept {
    if (warmup_epochs == 0 || epoch >= warmup_epochs) return base_lr;
    return base_lr * static_cast<double>(epoch) / static_cast<double>(warmup_epochs);
  }
};

/// One Adam step on the weighted mean batch loss. Returns the batch loss.
inline double backward_and_update(MlpModel& model, AdamState& adam, const DenseMatrix& batch_x,
                                  const SparseBinaryMatrix& batch_y, std::span<const double> loss_weights,
                                  double lr) {
  if (batch_x.rows() == 0) throw ContractError("backward_and_update: empty batch");
  for (double w : loss_weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw ContractError("backward_and_update: loss weights must be positive");
  double loss = 0.0;
  const auto grad = loss_gradient(model, batch_x, batch_y, loss_weights, &loss);
  for (double g : grad)
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient");
  adam.apply(model.parameters(), grad, lr);
  return loss;
}

// Checkpoint: "D2ACECKP" magic, u32 version, u64 layer count, u64 sizes...,
// u64 parameter count, doubles params, Adam config (4 doubles), u64 step,
// doubles first moment, doubles second moment. Little-endian host layout.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& path, const MlpModel& model, const AdamState& adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_vec = [&out](std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  out.write("D2ACECKP", 8);
  put(kCheckpointVersion);
  put(static_cast<std::uint64_t>(model.layer_sizes().size()));
  for (auto s : model.layer_sizes()) put(static_cast<std::uint64_t>(s));
  put(static_cast<std::uint64_t>(model.parameter_count()));
  put_vec(model.parameters());
  put(adam.config.beta1);
  put(adam.config.beta2);
  put(adam.config.weight_decay);
  put(adam.config.eps);
  put(adam.step);
  put_vec(adam.first_moment);
  put_vec(adam.second_moment);
}

inline std::pair<MlpModel, AdamState> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  auto get = [&in](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ParseError("truncated checkpoint");
  };
  auto get_vec = [&in](std::span<double> v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint");
  };
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "D2ACECKP") throw ParseError("not a checkpoint file");
  std::uint32_t version;
  get(version);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t nl;
  get(nl);
  if (nl < 2 || nl > 64) throw ParseError("implausible layer count in checkpoint");
  std::vector<std::size_t> sizes(nl);
  for (auto& s : sizes) {
    std::uint64_t v;
    get(v);
    s = static_cast<std::size_t>(v);
  }
  MlpModel model(sizes);
  std::uint64_t pc;
  get(pc);
  if (pc != model.parameter_count()) throw ParseError("checkpoint parameter count mismatch");
  get_vec(model.parameters());
  AdamState adam(model.parameter_count(), {});
  get(adam.config.beta1);
  get(adam.config.beta2);
  get(adam.config.weight_decay);
  get(adam.config.eps);
  get(adam.step);
  get_vec(adam.first_moment);
  get_vec(adam.second_moment);
  return {std::move(model), std::move(adam)};
}

}  // namespace d2ace
