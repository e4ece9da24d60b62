#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

namespace d2ace {

struct EvalReport {
  double macro_auc = 0.0;
  double macro_f1 = 0.0;
  double ranking_loss = 0.0;
  double map = 0.0;
  std::vector<double> per_label_auc;  // NaN for labels excluded from the mean
  std::size_t epoch = 0;
};

namespace detail {

inline void check_eval_shapes(const DenseMatrix& scores, const SparseBinaryMatrix& labels, const char* op) {
  require_shape(scores.rows() == labels.rows() && scores.cols() == labels.cols(), op,
                "scores and labels differ in shape");
}

inline std::vector<std::vector<char>> label_columns(const SparseBinaryMatrix& labels) {
  std::vector<std::vector<char>> cols(labels.cols(), std::vector<char>(labels.rows(), 0));
  for (std::size_t i = 0; i < labels.rows(); ++i)
    for (std::size_t j : labels.row(i)) cols[j][i] = 1;
  return cols;
}

/// Mann-Whitney AUC of one column via average ranks; NaN when a class is
/// missing.
inline double column_auc(const DenseMatrix& scores, std::size_t j, const std::vector<char>& y) {
  const std::size_t n = scores.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores(a, j) < scores(b, j); });
  double pos_rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b < n && scores(order[b], j) == scores(order[a], j)) ++b;
    const double avg_rank = 0.5 * static_cast<double>(a + 1 + b);  // mean of ranks a+1..b
    for (std::size_t r = a; r < b; ++r)
      if (y[order[r]]) {
        pos_rank_sum += avg_rank;
        ++npos;
      }
    a = b;
  }
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0) return std::nan("");
  const double np = static_cast<double>(npos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(nneg));
}

}  // namespace detail

/// Mean per-label AUC (ties count one half) over labels having both classes.
inline double macro_auc(const DenseMatrix& scores, const SparseBinaryMatrix& labels,
                        std::vector<double>* per_label = nullptr) {
  detail::check_eval_shapes(scores, labels, "macro_auc");
  const auto cols = detail::label_columns(labels);
  double sum = 0.0;
  std::size_t used = 0;
  if (per_label) per_label->assign(labels.cols(), std::nan(""));
  for (std::size_t j = 0; j < labels.cols(); ++j) {
    const double a = detail::column_auc(scores, j, cols[j]);
    if (per_label) (*per_label)[j] = a;
    if (std::isnan(a)) continue;
    sum += a;
    ++used;
  }
  if (used == 0) throw EvaluationError("macro_auc: no label has both positive and negative instances");
  return sum / static_cast<double>(used);
}

enum class F1Convention {
  SkipWithoutPositives,  // labels with no positive instance are left out
  IncludeAll,            // every label counts; undefined F1 is 0
};

/// Per-label F1 of (score >= threshold) averaged over labels.
inline double macro_f1(const DenseMatrix& scores, const SparseBinaryMatrix& labels, double threshold = 0.5,
                       F1Convention conv = F1Convention::SkipWithoutPositives) {
  detail::check_eval_shapes(scores, labels, "macro_f1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("macro_f1: threshold must be in (0,1)");
  const std::size_t q = labels.cols();
  std::vector<std::size_t> tp(q, 0), fp(q, 0), fn(q, 0);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto yr = labels.row(i);
    std::size_t next = 0;
    for (std::size_t j = 0; j < q; ++j) {
      const bool y = next < yr.size() && yr[next] == j;
      if (y) ++next;
      const bool p = scores(i, j) >= threshold;
      if (p && y) ++tp[j];
      else if (p) ++fp[j];
      else if (y) ++fn[j];
    }
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < q; ++j) {
    const std::size_t positives = tp[j] + fn[j];
    if (positives == 0 && conv == F1Convention::SkipWithoutPositives) continue;
    const std::size_t denom = 2 * tp[j] + fp[j] + fn[j];
    sum += denom ? 2.0 * static_cast<double>(tp[j]) / static_cast<double>(denom) : 0.0;
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

/// Fraction of (relevant, irrelevant) label pairs ordered wrongly, ties
/// counting one half, averaged over instances that have both kinds.
inline double ranking_loss(const DenseMatrix& scores, const SparseBinaryMatrix& labels) {
  detail::check_eval_shapes(scores, labels, "ranking_loss");
  const std::size_t q = labels.cols();
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> rel, irr;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    rel.clear();
    irr.clear();
    auto yr = labels.row(i);
    std::size_t next = 0;
    for (std::size_t j = 0; j < q; ++j) {
      const bool y = next < yr.size() && yr[next] == j;
      if (y) ++next;
      (y ? rel : irr).push_back(scores(i, j));
    }
    if (rel.empty() || irr.empty()) continue;
    // count pairs via sorting the irrelevant scores
    std::sort(irr.begin(), irr.end());
    double bad = 0.0;
    for (double r : rel) {
      const auto lo = std::lower_bound(irr.begin(), irr.end(), r);
      const auto hi = std::upper_bound(lo, irr.end(), r);
      bad += static_cast<double>(irr.end() - hi) + 0.5 * static_cast<double>(hi - lo);
    }
    sum += bad / (static_cast<double>(rel.size()) * static_cast<double>(irr.size()));
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

/// Average precision per label over instances ranked by descending score
/// (ties by ascending index), averaged over labels with a positive.
inline double mean_average_precision(const DenseMatrix& scores, const SparseBinaryMatrix& labels) {
  detail::check_eval_shapes(scores, labels, "mean_average_precision");
  const auto cols = detail::label_columns(labels);
  const std::size_t n = scores.rows();
  std::vector<std::size_t> order(n);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < labels.cols(); ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, j) > scores(b, j); });
    std::size_t hits = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      if (cols[j][order[r]]) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    if (hits == 0) continue;
    sum += ap / static_cast<double>(hits);
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

inline EvalReport evaluate(const DenseMatrix& scores, const SparseBinaryMatrix& labels, std::size_t epoch = 0,
                           double threshold = 0.5) {
  EvalReport r;
  r.epoch = epoch;
  r.macro_auc = macro_auc(scores, labels, &r.per_label_auc);
  r.macro_f1 = macro_f1(scores, labels, threshold);
  r.ranking_loss = ranking_loss(scores, labels);
  r.map = mean_average_precision(scores, labels);
  return r;
}

}  // namespace d2ace
