#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "d2ace/core/errors.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

namespace d2ace {

struct FoldAssignment {
  std::size_t folds = 0;
  std::vector<std::size_t> fold_of;

  std::vector<std::size_t> members(std::size_t f) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == f) idx.push_back(i);
    return idx;
  }

  std::vector<std::size_t> complement(std::size_t f) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != f) idx.push_back(i);
    return idx;
  }

  /// Per label, max minus min positive count over folds.
  std::vector<std::size_t> label_spread(const SparseBinaryMatrix& labels) const {
    std::vector<std::vector<std::size_t>> count(labels.cols(), std::vector<std::size_t>(folds, 0));
    for (std::size_t i = 0; i < labels.rows(); ++i)
      for (std::size_t j : labels.row(i)) ++count[j][fold_of[i]];
    std::vector<std::size_t> spread(labels.cols());
    for (std::size_t j = 0; j < labels.cols(); ++j) {
      auto [lo, hi] = std::minmax_element(count[j].begin(), count[j].end());
      spread[j] = *hi - *lo;
    }
    return spread;
  }
};

namespace detail {

inline void check_fold_count(std::size_t n, std::size_t folds) {
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (folds > n)
    throw ConfigError("folds=" + std::to_string(folds) + " exceeds instance count " + std::to_string(n));
}

// Content key for an instance's label row, salted by the seed. Instances are
// visited in key order so the assignment does not depend on input order.
inline std::uint64_t row_key(std::span<const std::size_t> row, std::uint64_t salt) {
  std::uint64_t h = salt ^ 0x51ed270b27a3c9f1ULL;
  std::uint64_t s = h;
  h = splitmix64(s);
  for (std::size_t j : row) {
    s = h ^ (j + 1);
    h = splitmix64(s);
  }
  return h;
}

}  // namespace detail

/// Iterative stratification for multi-label data. Repeatedly takes the label
/// with the fewest unassigned positives and hands each of its instances to
/// the fold that still wants that label most (then the fold wanting the most
/// instances overall, then a random pick). Instances without labels go to
/// the fold with the largest remaining demand.
inline FoldAssignment stratify_folds(const SparseBinaryMatrix& labels, std::size_t folds, RandomStream& rng) {
  const std::size_t n = labels.rows();
  const std::size_t q = labels.cols();
  detail::check_fold_count(n, folds);

  const double share = 1.0 / static_cast<double>(folds);
  std::vector<double> want(folds, static_cast<double>(n) * share);
  std::vector<std::vector<double>> want_label(q, std::vector<double>(folds));
  const auto counts = labels.column_counts();
  for (std::size_t j = 0; j < q; ++j)
    std::fill(want_label[j].begin(), want_label[j].end(), static_cast<double>(counts[j]) * share);

  // Visit order: by salted content key, ties by index.
  const std::uint64_t salt = rng.next_u64();
  std::vector<std::uint64_t> key(n);
  for (std::size_t i = 0; i < n; ++i) key[i] = detail::row_key(labels.row(i), salt);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key[a] != key[b] ? key[a] < key[b] : a < b; });

  // Per label, instances carrying it, in visit order.
  std::vector<std::vector<std::size_t>> carriers(q);
  for (std::size_t i : order)
    for (std::size_t j : labels.row(i)) carriers[j].push_back(i);

  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  FoldAssignment out{folds, std::vector<std::size_t>(n, kUnassigned)};
  std::vector<std::size_t> remaining(counts.begin(), counts.end());

  std::vector<std::size_t> best;
  auto pick = [&](auto&& score_primary) {
    best.clear();
    double top = -std::numeric_limits<double>::infinity();
    double top2 = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < folds; ++f) {
      const double p = score_primary(f);
      const double s = want[f];
      if (p > top || (p == top && s > top2)) {
        top = p;
        top2 = s;
        best.assign(1, f);
      } else if (p == top && s == top2) {
        best.push_back(f);
      }
    }
    return best.size() == 1 ? best[0] : best[static_cast<std::size_t>(rng.below(best.size()))];
  };

  auto assign = [&](std::size_t i, std::size_t f) {
    out.fold_of[i] = f;
    want[f] -= 1.0;
    for (std::size_t j : labels.row(i)) {
      want_label[j][f] -= 1.0;
      --remaining[j];
    }
  };

  while (true) {
    std::size_t lbl = q;
    for (std::size_t j = 0; j < q; ++j)
      if (remaining[j] > 0 && (lbl == q || remaining[j] < remaining[lbl])) lbl = j;
    if (lbl == q) break;
    for (std::size_t i : carriers[lbl]) {
      if (out.fold_of[i] != kUnassigned) continue;
      assign(i, pick([&](std::size_t f) { return want_label[lbl][f]; }));
    }
  }
  for (std::size_t i : order)
    if (out.fold_of[i] == kUnassigned) assign(i, pick([](std::size_t) { return 0.0; }));
  return out;
}

/// Plain shuffled folds, sizes differing by at most one.
inline FoldAssignment random_folds(std::size_t n, std::size_t folds, RandomStream& rng) {
  detail::check_fold_count(n, folds);
  FoldAssignment out{folds, std::vector<std::size_t>(n)};
  const auto perm = rng.permutation(n);
  for (std::size_t r = 0; r < n; ++r) out.fold_of[perm[r]] = r % folds;
  return out;
}

struct TrainValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Holds out round(fraction * |indices|) of `indices` (at least one, and
/// leaving at least one) as validation. Both parts keep ascending order.
inline TrainValidationSplit holdout_split(std::vector<std::size_t> indices, double fraction, RandomStream& rng) {
  if (fraction <= 0.0 || fraction >= 1.0) throw ConfigError("validation fraction must be in (0,1)");
  if (indices.size() < 2) throw ConfigError("need at least 2 instances to hold out validation");
  rng.shuffle(std::span<std::size_t>(indices));
  auto nv = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(indices.size())));
  nv = std::clamp<std::size_t>(nv, 1, indices.size() - 1);
  TrainValidationSplit s;
  s.validation.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(nv));
  s.train.assign(indices.begin() + static_cast<std::ptrdiff_t>(nv), indices.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace d2ace
