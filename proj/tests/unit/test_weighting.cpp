#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/weighting/weighting.hpp"

using namespace d2ace;

namespace {

constexpr double kOracleTol = 1e-9;
constexpr double kPathTol = 1e-10;

SparseBinaryMatrix random_labels(std::size_t n, std::size_t q, double rate, RandomStream& rng) {
  std::vector<SparseBinaryMatrix::Row> rows(n);
  for (auto& r : rows)
    for (std::size_t j = 0; j < q; ++j)
      if (rng.bernoulli(rate)) r.push_back(j);
  return SparseBinaryMatrix(q, std::move(rows));
}

DenseMatrix random_metric(std::size_t n, std::size_t q, RandomStream& rng) {
  DenseMatrix a(n, q);
  for (double& v : a.data()) v = rng.uniform();
  return a;
}

NeighborTable random_neighbors(std::size_t n, std::size_t k, RandomStream& rng) {
  DenseMatrix x(n, 2);
  for (double& v : x.data()) v = rng.normal();
  return knn_bruteforce(x, k);
}

NeighborTable full_neighborhood(std::size_t n) {
  NeighborTable t{n - 1, std::vector<std::vector<std::size_t>>(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = 0; m < n; ++m)
      if (m != i) t.neighbors[i].push_back(m);
  return t;
}

// phi by the definition: rowsum(M (.) (Z C)) with every matrix dense.
std::vector<double> dense_phi_oracle(const DenseMatrix& m, const DenseMatrix& z, const DenseMatrix& c) {
  const std::size_t n = m.rows(), q = m.cols();
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      double zc = 0.0;
      for (std::size_t k = 0; k < q; ++k) zc += z(i, k) * c(k, j);
      phi[i] += m(i, j) * zc;
    }
  return phi;
}

// Cosine of dense columns.
DenseMatrix cosine_oracle(const DenseMatrix& m) {
  const std::size_t q = m.cols();
  DenseMatrix c(q, q);
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t k = 0; k < q; ++k) {
      double dot = 0.0, nj = 0.0, nk = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        dot += m(i, j) * m(i, k);
        nj += m(i, j) * m(i, j);
        nk += m(i, k) * m(i, k);
      }
      c(j, k) = nj > 0 && nk > 0 ? dot / std::sqrt(nj * nk) : 0.0;
    }
  return c;
}

}  // namespace

TEST(LabelStats, Oracles) {
  const auto s = label_stats(DenseMatrix{{0.0, 0.4, 0.0}, {1.0, 0.4, 0.0}});
  EXPECT_NEAR(s.mu[0], 0.5, kOracleTol);
  EXPECT_NEAR(s.sigma[0], 0.5, kOracleTol);
  EXPECT_NEAR(s.v[0], std::exp(0.5), kOracleTol);
  EXPECT_NEAR(s.v[0], 1.648721, 1e-6);
  EXPECT_NEAR(s.sigma[1], 0.0, 1e-12);
  EXPECT_NEAR(s.v[1], std::exp(0.2), kOracleTol);
  EXPECT_EQ(s.v[2], 1.0);
}

TEST(DynamicWeightedSum, Oracles) {
  const DenseMatrix a{{1, 0}, {0, 2}};
  // column stats: mu = [0.5, 1], sigma = [0.5, 1]
  const auto s = label_stats(a);
  const auto delta = dynamic_label_weighted_sum(a, s);
  EXPECT_NEAR(delta[0], 1.0 * std::exp(0.5), kOracleTol);
  EXPECT_NEAR(delta[1], 2.0 * std::exp(1.0), kOracleTol);

  LabelStats ones{{}, {}, {1.0, 1.0, 1.0}};
  const DenseMatrix b{{0.1, 0.2, 0.3}, {1, 1, 1}};
  const auto rs = dynamic_label_weighted_sum(b, ones);
  EXPECT_NEAR(rs[0], 0.6, 1e-15);
  EXPECT_NEAR(rs[1], 3.0, 1e-15);
}

TEST(MaskedMetric, Oracles) {
  const SparseBinaryMatrix y(2, {{0}, {1}});
  const DenseMatrix a{{0.3, 0.9}, {0.7, 0.2}};
  EXPECT_EQ(masked_metric(a, y).denseify(), (DenseMatrix{{0.3, 0}, {0, 0.2}}));
  EXPECT_EQ(masked_metric(a, SparseBinaryMatrix::ones(2, 2)).denseify(), a);
  const auto zero = masked_metric(a, SparseBinaryMatrix(2, 2));
  EXPECT_EQ(zero.nnz(), 0u);
  EXPECT_EQ(correlation_enhance(zero, SparseBinaryMatrix::ones(2, 2), cosine_correlation(zero)),
            (std::vector<double>{0.0, 0.0}));
}

TEST(Cosine, Oracles) {
  const DenseMatrix a{{1, 1}, {0, 1}};  // col1 = [1,0], col2 = [1,1]
  const auto m = masked_metric(a, SparseBinaryMatrix::ones(2, 2));
  const auto c = cosine_correlation(m);
  EXPECT_NEAR(c(0, 1), 1.0 / std::numbers::sqrt2, kOracleTol);
  EXPECT_NEAR(c(0, 1), 0.707107, 1e-6);
  EXPECT_EQ(c(0, 0), 1.0);
  EXPECT_EQ(c(1, 1), 1.0);
  const auto ortho = cosine_correlation(masked_metric(DenseMatrix{{1, 0}, {0, 1}}, SparseBinaryMatrix::ones(2, 2)));
  EXPECT_EQ(ortho(0, 1), 0.0);
  EXPECT_EQ(cosine_correlation_sparse(m).denseify(), c);
}

TEST(Cosine, MatchesOracleAndIsSymmetric) {
  RandomStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(40), q = 1 + rng.below(20);
    const auto y = random_labels(n, q, 0.2, rng);
    const auto m = masked_metric(random_metric(n, q, rng), y);
    const auto c = cosine_correlation(m);
    const auto oracle = cosine_oracle(m.denseify());
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = 0; k < q; ++k) {
        EXPECT_LT(std::abs(c(j, k) - c(k, j)), 1e-12);
        EXPECT_NEAR(c(j, k), oracle(j, k), 1e-12);
      }
    EXPECT_LT(max_abs_diff(cosine_correlation_sparse(m).denseify(), c), 1e-12);
  }
}

TEST(LocalAppearance, Oracles) {
  RandomStream rng(2);
  const auto y = random_labels(10, 4, 0.3, rng);
  const NeighborTable none{0, std::vector<std::vector<std::size_t>>(10)};
  EXPECT_EQ(local_appearance(y, none), y);

  const SparseBinaryMatrix toy(2, {{0}, {1}, {0, 1}});
  EXPECT_EQ(local_appearance(toy, full_neighborhood(3)), SparseBinaryMatrix::ones(3, 2));

  // a label nobody carries never appears
  const SparseBinaryMatrix gap(3, {{0}, {2}, {0}});
  const auto z = local_appearance(gap, full_neighborhood(3));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(z.get(i, 0));
    EXPECT_FALSE(z.get(i, 1));
    EXPECT_TRUE(z.get(i, 2));
  }
}

TEST(Enhance, IdentityCorrelationGivesMetric) {
  RandomStream rng(4);
  const auto y = random_labels(12, 5, 0.4, rng);
  const auto m = masked_metric(random_metric(12, 5, rng), y);
  const auto r = correlation_enhanced_matrix(m, y, DenseMatrix::identity(5));
  EXPECT_EQ(r, m.denseify());
}

TEST(Enhance, WorkedTwoByTwo) {
  const SparseBinaryMatrix y(2, {{0, 1}, {1}});
  const DenseMatrix a{{0.5, 0.5}, {0.5, 1.0}};
  const auto z = local_appearance(y, full_neighborhood(2));
  const auto m = masked_metric(a, y);
  const DenseMatrix md{{0.5, 0.5}, {0.0, 1.0}};
  const auto c = cosine_oracle(md);
  const auto oracle = dense_phi_oracle(md, z.denseify(), c);
  const auto dense = correlation_enhance(m, z, cosine_correlation(m));
  const auto sparse = correlation_enhance(m, z, cosine_correlation_sparse(m));
  // C01 = 0.25 / (0.5 * sqrt(1.25)); phi_0 = 0.5 (1 + C01) * 2, phi_1 = 1 * (C01 + 1)
  const double c01 = 0.25 / (0.5 * std::sqrt(1.25));
  EXPECT_NEAR(oracle[0], 1.0 + c01, 1e-12);
  EXPECT_NEAR(oracle[1], 1.0 + c01, 1e-12);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(dense[i], oracle[i], 1e-12);
    EXPECT_NEAR(sparse[i], oracle[i], 1e-12);
  }
}

TEST(Enhance, SparseAndDensePathsAgree) {
  RandomStream rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6 + rng.below(45), q = 2 + rng.below(29);
    const auto y = random_labels(n, q, 0.15, rng);
    const auto a = random_metric(n, q, rng);
    const auto z = local_appearance(y, random_neighbors(n, 1 + rng.below(4), rng));
    const auto m = masked_metric(a, y);
    const auto dense_r = correlation_enhanced_matrix(m, z, cosine_correlation(m));
    const auto sparse_r = correlation_enhanced_entries(m, z, cosine_correlation_sparse(m)).denseify();
    EXPECT_LE(max_abs_diff(dense_r, sparse_r), kPathTol);
    const auto pd = correlation_enhance(m, z, cosine_correlation(m));
    const auto ps = correlation_enhance(m, z, cosine_correlation_sparse(m));
    const auto oracle = dense_phi_oracle(m.denseify(), z.denseify(), cosine_oracle(m.denseify()));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(pd[i], ps[i], kPathTol);
      EXPECT_NEAR(pd[i], oracle[i], kPathTol);
    }
  }
}

TEST(Enhance, IrrelevantEntriesHaveNoInfluence) {
  RandomStream rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 15, q = 6;
    const auto y = random_labels(n, q, 0.3, rng);
    const auto z = local_appearance(y, random_neighbors(n, 3, rng));
    auto a = random_metric(n, q, rng);
    auto b = a;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < q; ++j)
        if (!y.get(i, j)) b(i, j) = rng.uniform(0.0, 10.0);
    const auto ma = masked_metric(a, y), mb = masked_metric(b, y);
    EXPECT_EQ(ma.denseify(), mb.denseify());
    EXPECT_EQ(cosine_correlation(ma), cosine_correlation(mb));
    EXPECT_EQ(correlation_enhance(ma, z, cosine_correlation_sparse(ma)),
              correlation_enhance(mb, z, cosine_correlation_sparse(mb)));
  }
}

TEST(Enhance, MonotoneInMetricForFixedCorrelation) {
  RandomStream rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10, q = 5;
    const auto y = random_labels(n, q, 0.5, rng);
    const auto z = local_appearance(y, random_neighbors(n, 2, rng));
    const auto a = random_metric(n, q, rng);
    const auto m = masked_metric(a, y);
    const auto c = cosine_correlation(m);  // nonnegative since metrics are
    const auto base = correlation_enhance(m, z, c);
    auto bumped = m;
    for (std::size_t i = 0; i < n; ++i)
      for (auto& [j, v] : bumped.entries[i]) v += rng.uniform();
    const auto more = correlation_enhance(bumped, z, c);
    for (std::size_t i = 0; i < n; ++i) EXPECT_GE(more[i], base[i]);
  }
}

TEST(MinMax, Oracles) {
  EXPECT_EQ(minmax_normalize(std::vector<double>{0, 5, 10}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{3, 3, 3}), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_THROW(minmax_normalize(std::vector<double>{0, std::nan("")}), ContractError);
}

TEST(MlUncDegenerate, Oracles) {
  const DenseMatrix u{{0.4, 0.6}};
  EXPECT_NEAR(mlunc_degenerate_weights(u, DenseMatrix{{1, 0.5}, {0.5, 1}})[0], 1.5, kOracleTol);
  RandomStream rng(1);
  const auto big = random_metric(7, 4, rng);
  const auto rs = row_sums(big);
  const auto w = mlunc_degenerate_weights(big, DenseMatrix::identity(4));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(w[i], rs[i], 1e-15);
  EXPECT_THROW(mlunc_degenerate_weights(u, DenseMatrix{{1, 0.5}, {0.2, 1}}), ContractError);
}

TEST(MlUncDegenerate, GlobalUnmaskedEnhancementReduces) {
  RandomStream rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(20), q = 2 + rng.below(8);
    const auto u = random_metric(n, q, rng);
    DenseMatrix c(q, q);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = j; k < q; ++k) c(j, k) = c(k, j) = j == k ? 1.0 : rng.uniform(-1.0, 1.0);
    const auto m = masked_metric(u, SparseBinaryMatrix::ones(n, q));
    const auto phi = correlation_enhance(m, SparseBinaryMatrix::ones(n, q), c);
    const auto w = mlunc_degenerate_weights(u, c);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(phi[i], w[i], 1e-10);
  }
}

TEST(InstanceWeights, PipelineRangeAndPaths) {
  RandomStream rng(41);
  const std::size_t n = 40, q = 6;
  const auto y = random_labels(n, q, 0.3, rng);
  const auto z = local_appearance(y, random_neighbors(n, 5, rng));
  const auto a = random_metric(n, q, rng);
  const auto sparse = compute_instance_weights(a, y, z, {true, true});
  const auto dense = compute_instance_weights(a, y, z, {true, false});
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_GE(sparse.normalized[i], 0.0);
    EXPECT_LE(sparse.normalized[i], 1.0);
    EXPECT_NEAR(sparse.raw[i], sparse.delta[i] + sparse.phi[i], 1e-15);
    EXPECT_NEAR(sparse.raw[i], dense.raw[i], kPathTol);
  }
  EXPECT_EQ(*std::min_element(sparse.normalized.begin(), sparse.normalized.end()), 0.0);
  EXPECT_EQ(*std::max_element(sparse.normalized.begin(), sparse.normalized.end()), 1.0);
}
