#include <gtest/gtest.h>

#include <cmath>

#include "d2ace/tracking/tracking.hpp"

using namespace d2ace;

namespace {

constexpr double kOracleTol = 1e-9;

DenseMatrix filled(std::size_t n, std::size_t q, double v) { return DenseMatrix(n, q, v); }

}  // namespace

TEST(Entropy, Oracles) {
  EXPECT_EQ(binary_entropy(0.5), 1.0);
  // -(0.25 log2 0.25 + 0.75 log2 0.75), evaluated by hand
  EXPECT_NEAR(binary_entropy(0.25), 0.8112781244591328, kOracleTol);
  EXPECT_NEAR(binary_entropy(0.25), 0.811278, 1e-6);
  EXPECT_NEAR(binary_entropy(1e-7), 2.4696191632206375e-6, 1e-15);
  EXPECT_NEAR(binary_entropy(0.0), binary_entropy(1e-7), 1e-15);
  EXPECT_NEAR(binary_entropy(0.3), binary_entropy(0.7), 1e-15);
}

TEST(Fluctuation, Oracles) {
  const std::vector<double> h{0.2, 0.5, 0.4};
  EXPECT_NEAR(temporal_fluctuation(h, 3), 0.2, kOracleTol);
  const std::vector<double> flat(5, 0.3);
  EXPECT_EQ(temporal_fluctuation(flat, 5), 0.0);
  const std::vector<double> alt{0, 1, 0, 1, 0};
  EXPECT_EQ(temporal_fluctuation(alt, 5), 1.0);
  // only the last `window` values count
  const std::vector<double> longer{0.9, 0.0, 0.2, 0.5, 0.4};
  EXPECT_NEAR(temporal_fluctuation(longer, 3), 0.2, kOracleTol);
}

TEST(Uncertainty, HandCaseAndBoundaries) {
  PredictionHistory h(1, 1, {5, 0.5, 0.7, 0.5});
  h.push(filled(1, 1, 0.3));
  h.push(filled(1, 1, 0.5));  // entropy 1, fluctuation 0.2
  EXPECT_NEAR(h.uncertainty()(0, 0), 0.6, kOracleTol);
  EXPECT_EQ(h.uncertainty(1.0), h.entropy());
  EXPECT_EQ(h.uncertainty(0.0), h.fluctuation());
}

TEST(FlipEma, Oracles) {
  EXPECT_NEAR(ema_step(0.5, 1.0, 0.7), 0.85, kOracleTol);
  EXPECT_NEAR(ema_step(0.5, 0.0, 0.7), 0.15, kOracleTol);
  EXPECT_NEAR(ema_step(ema_step(0.5, 0.0, 0.7), 0.0, 0.7), 0.045, kOracleTol);
  EXPECT_EQ(ema_step(0.4, 1.0, 1.0), 1.0);
}

TEST(FlipEma, HistoryTracksFlips) {
  PredictionHistory h(1, 2);
  h.push(DenseMatrix{{0.2, 0.8}});
  EXPECT_EQ(h.ema_flip()(0, 0), 0.0);
  h.push(DenseMatrix{{0.7, 0.9}});  // label 0 flips
  EXPECT_NEAR(h.ema_flip()(0, 0), 0.7, 1e-15);
  EXPECT_EQ(h.ema_flip()(0, 1), 0.0);
  h.push(DenseMatrix{{0.1, 0.95}});
  EXPECT_NEAR(h.ema_flip()(0, 0), 0.7 + 0.3 * 0.7, 1e-15);
}

TEST(Hardness, Oracles) {
  EXPECT_NEAR(compute_hardness(filled(1, 1, 2.0), filled(1, 1, 0.85))(0, 0), 0.3, kOracleTol);
  EXPECT_EQ(compute_hardness(filled(1, 1, 3.0), filled(1, 1, 1.0))(0, 0), 0.0);
  EXPECT_EQ(compute_hardness(filled(1, 1, 3.0), filled(1, 1, 0.0))(0, 0), 3.0);
}

TEST(Tracking, MetricBoundsOverRandomEpochs) {
  RandomStream rng(13);
  PredictionHistory h(20, 4);
  for (std::size_t t = 1; t <= 15; ++t) {
    DenseMatrix p(20, 4), loss(20, 4);
    for (double& v : p.data()) v = rng.uniform();
    for (double& v : loss.data()) v = rng.uniform(0.0, 5.0);
    h.push(p);
    const auto m = compute_metrics(h, loss, t);
    for (double u : m.uncertainty.data()) {
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
    }
    for (std::size_t k = 0; k < loss.size(); ++k) {
      EXPECT_GE(m.hardness.data()[k], 0.0);
      EXPECT_LE(m.hardness.data()[k], loss.data()[k]);
    }
  }
}

TEST(Tracking, EmaFixedPoint) {
  // alternating predictions give a constant flip of 1
  const double l2 = 0.7;
  PredictionHistory h(1, 1, {5, 0.5, l2, 0.5});
  h.push(filled(1, 1, 0.1));
  for (int k = 1; k <= 12; ++k) {
    h.push(filled(1, 1, k % 2 ? 0.9 : 0.1));
    EXPECT_LE(std::abs(h.ema_flip()(0, 0) - 1.0), std::pow(1.0 - l2, k) + 1e-15);
  }
}

TEST(Tracking, WindowDiscipline) {
  PredictionHistory h(1, 1, {3, 0.0, 0.7, 0.5});
  const std::vector<double> series{0.9, 0.1, 0.2, 0.6, 0.5};
  for (std::size_t t = 0; t < series.size(); ++t) {
    h.push(filled(1, 1, series[t]));
    EXPECT_EQ(h.size(), std::min<std::size_t>(t + 1, 3));
  }
  // last three values 0.2, 0.6, 0.5 -> (0.4 + 0.1) / 2
  EXPECT_NEAR(h.fluctuation()(0, 0), 0.25, 1e-15);
  EXPECT_EQ(h.epochs_seen(), 5u);
}

TEST(Tracking, ContractsAndConfig) {
  PredictionHistory h(2, 2);
  EXPECT_THROW(h.entropy(), ContractError);
  EXPECT_THROW(h.push(DenseMatrix(3, 2)), ShapeError);
  EXPECT_THROW(PredictionHistory(2, 2, {0, 0.5, 0.7, 0.5}), ConfigError);
  EXPECT_THROW(PredictionHistory(2, 2, {5, 1.5, 0.7, 0.5}), ConfigError);
}
