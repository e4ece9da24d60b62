#pragma once

#include <string>
#include <vector>

#include "d2ace/core/random_stream.hpp"
#include "d2ace/dataio/dataset.hpp"

namespace d2ace {

/// Gaussian features with labels from noisy linear scores over a shared
/// low-rank factor, so labels are correlated and partly learnable.
/// Every label is forced to have at least one positive and one negative.
inline MultiLabelDataset make_synthetic_dataset(std::size_t n, std::size_t d, std::size_t q, std::uint64_t seed,
                                                double noise = 0.5) {
  if (n < 2 || d < 1 || q < 2) throw ConfigError("synthetic dataset needs n >= 2, d >= 1, q >= 2");
  RandomStream rng(seed, {0, 0, 0, purpose::kSynthetic});
  MultiLabelDataset ds;
  ds.name = "synthetic-n" + std::to_string(n) + "-d" + std::to_string(d) + "-q" + std::to_string(q);
  ds.features = DenseMatrix(n, d);
  for (double& v : ds.features.data()) v = rng.normal();

  const std::size_t rank = std::max<std::size_t>(1, q / 3);
  DenseMatrix basis(d, rank), mix(rank, q);
  for (double& v : basis.data()) v = rng.normal() / std::sqrt(static_cast<double>(d));
  for (double& v : mix.data()) v = rng.normal();
  std::vector<double> bias(q);
  for (double& b : bias) b = rng.uniform(-1.5, 0.0);  // mostly sparse labels
  const auto scores = matmul(matmul(ds.features, basis), mix);

  std::vector<SparseBinaryMatrix::Row> rows(n);
  std::vector<std::size_t> pos(q, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j)
      if (scores(i, j) + bias[j] + noise * rng.normal() > 0.0) {
        rows[i].push_back(j);
        ++pos[j];
      }
  for (std::size_t j = 0; j < q; ++j) {
    const std::size_t i = static_cast<std::size_t>(rng.below(n));
    auto& r = rows[i];
    const auto it = std::lower_bound(r.begin(), r.end(), j);
    const bool has = it != r.end() && *it == j;
    if (pos[j] == 0 && !has) {
      r.insert(it, j);
      ++pos[j];
    } else if (pos[j] == n && has) {
      r.erase(it);
      --pos[j];
    }
  }
  ds.labels = SparseBinaryMatrix(q, std::move(rows));
  for (std::size_t k = 0; k < d; ++k) ds.feature_names.push_back("x" + std::to_string(k));
  for (std::size_t j = 0; j < q; ++j) ds.label_names.push_back("y" + std::to_string(j));
  return ds;
}

}  // namespace d2ace
