#include <gtest/gtest.h>

#include <filesystem>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

using namespace d2ace;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, RandomStream& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Textbook triple loop, independent of the i-k-j kernel.
DenseMatrix naive_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST(DenseMatrix, ProductHandArithmetic) {
  const DenseMatrix a{{1, 2}};
  const DenseMatrix b{{3}, {4}};
  const auto c = matmul(a, b);
  ASSERT_EQ(c.rows(), 1u);
  ASSERT_EQ(c.cols(), 1u);
  EXPECT_EQ(c(0, 0), 11.0);
}

TEST(DenseMatrix, IdentityAndZero) {
  RandomStream rng(3);
  const auto b = random_matrix(2, 4, rng);
  EXPECT_EQ(matmul(DenseMatrix::identity(2), b), b);
  EXPECT_EQ(matmul(DenseMatrix(3, 2), b), DenseMatrix(3, 4));
}

TEST(DenseMatrix, ProductMatchesNaiveLoop) {
  RandomStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(5, 7, rng);
    const auto b = random_matrix(7, 3, rng);
    EXPECT_LE(max_abs_diff(matmul(a, b), naive_product(a, b)), 1e-12);
  }
}

TEST(DenseMatrix, ShapeErrors) {
  EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ShapeError);
  EXPECT_THROW(hadamard(DenseMatrix(2, 3), DenseMatrix(3, 2)), ShapeError);
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(DenseMatrix, Hadamard) {
  EXPECT_EQ(hadamard(DenseMatrix{{2, 3}}, DenseMatrix{{4, 5}}), (DenseMatrix{{8, 15}}));
  const DenseMatrix a{{1.5, -2}, {0.25, 7}};
  EXPECT_EQ(hadamard(a, DenseMatrix(2, 2, 1.0)), a);
  EXPECT_EQ(hadamard(a, DenseMatrix(2, 2)), DenseMatrix(2, 2));
}

TEST(SparseBinaryMatrix, ProductZeroAndSelector) {
  const SparseBinaryMatrix zero(4, 3);
  EXPECT_EQ(sparse_dense_matmul(zero, DenseMatrix::identity(3)), DenseMatrix(4, 3));

  SparseBinaryMatrix z(3, 3);
  z.set(0, 1);
  const auto r = sparse_dense_matmul(z, DenseMatrix::identity(3));
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 1), 1.0);
  EXPECT_EQ(r(0, 2), 0.0);
}

TEST(SparseBinaryMatrix, ProductMatchesDense) {
  RandomStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix zd(8, 5);
    for (double& v : zd.data()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
    const auto c = random_matrix(5, 5, rng);
    const auto z = SparseBinaryMatrix::from_dense(zd);
    EXPECT_LE(max_abs_diff(sparse_dense_matmul(z, c), naive_product(zd, c)), 1e-12);
    EXPECT_EQ(z.denseify(), zd);
  }
  EXPECT_THROW(sparse_dense_matmul(SparseBinaryMatrix(2, 3), DenseMatrix(4, 4)), ShapeError);
}

TEST(SparseBinaryMatrix, RejectsBadRows) {
  EXPECT_THROW(SparseBinaryMatrix(3, {{0, 3}}), ShapeError);
  EXPECT_THROW(SparseBinaryMatrix(3, {{1, 1}}), ShapeError);
  const SparseBinaryMatrix m(3, {{2, 0}, {}});
  EXPECT_TRUE(m.get(0, 0));
  EXPECT_TRUE(m.get(0, 2));
  EXPECT_FALSE(m.get(1, 1));
  EXPECT_EQ(m.nnz(), 2u);
  EXPECT_EQ(m.column_counts(), (std::vector<std::size_t>{1, 0, 1}));
}

TEST(Knn, CollinearPoints) {
  const DenseMatrix x{{0}, {1}, {10}};
  const auto t = knn_bruteforce(x, 1);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.neighbors[0], std::vector<std::size_t>{1});
  EXPECT_EQ(t.neighbors[1], std::vector<std::size_t>{0});
  EXPECT_EQ(t.neighbors[2], std::vector<std::size_t>{1});
}

TEST(Knn, DuplicatesAndFullNeighborhood) {
  const DenseMatrix x{{5, 5}, {0, 0}, {5, 5}, {5, 5}};
  const auto t = knn_bruteforce(x, 1);
  EXPECT_EQ(t.neighbors[0][0], 2u);
  EXPECT_EQ(t.neighbors[2][0], 0u);

  const auto full = knn_bruteforce(x, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    auto row = full.neighbors[i];
    std::sort(row.begin(), row.end());
    std::vector<std::size_t> expect;
    for (std::size_t m = 0; m < 4; ++m)
      if (m != i) expect.push_back(m);
    EXPECT_EQ(row, expect);
  }
  EXPECT_THROW(knn_bruteforce(x, 4), ConfigError);
}

TEST(Knn, NeverListsSelfAndSortedByDistance) {
  RandomStream rng(9);
  const auto x = random_matrix(40, 3, rng);
  const auto t = knn_bruteforce(x, 6);
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) s += (x(a, c) - x(b, c)) * (x(a, c) - x(b, c));
    return s;
  };
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& r = t.neighbors[i];
    for (std::size_t k = 0; k < r.size(); ++k) {
      EXPECT_NE(r[k], i);
      if (k) {
        EXPECT_LE(dist(i, r[k - 1]), dist(i, r[k]));
      }
    }
    // nothing outside the list is closer than its last member
    for (std::size_t m = 0; m < 40; ++m)
      if (m != i && std::find(r.begin(), r.end(), m) == r.end()) {
        EXPECT_GE(dist(i, m), dist(i, r.back()));
      }
  }
}

TEST(Knn, CacheRoundTripAndKeying) {
  RandomStream rng(2);
  const auto t = knn_bruteforce(random_matrix(12, 2, rng), 3);
  const auto path = std::filesystem::temp_directory_path() / "d2ace_knn_cache_test.csv";
  write_knn_cache(path, t, 0xabcdefULL);
  const auto back = read_knn_cache(path, 0xabcdefULL, 3);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, t);
  EXPECT_FALSE(read_knn_cache(path, 0xabcdeeULL, 3).has_value());
  EXPECT_FALSE(read_knn_cache(path, 0xabcdefULL, 4).has_value());
  std::filesystem::remove(path);
}

TEST(RandomStream, StreamsAreReproducibleAndDistinct) {
  RandomStream a(7, {0, 1, 2, purpose::kBatches});
  RandomStream b(7, {0, 1, 2, purpose::kBatches});
  RandomStream c(7, {0, 1, 3, purpose::kBatches});
  bool differs = false;
  for (int k = 0; k < 16; ++k) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomStream, UniformAndBelowRanges) {
  RandomStream rng(1);
  std::vector<int> hits(7, 0);
  for (int k = 0; k < 7000; ++k) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    ++hits[rng.below(7)];
  }
  for (int h : hits) EXPECT_GT(h, 800);
  const auto p = rng.permutation(50);
  auto s = p;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i], i);
}

TEST(SparseBinaryMatrix, ProductEqualsDenseExactly) {
  RandomStream rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12), q = 1 + rng.below(9), m = 1 + rng.below(6);
    DenseMatrix zd(n, q);
    for (double& v : zd.data()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const auto c = random_matrix(q, m, rng);
    EXPECT_EQ(sparse_dense_matmul(SparseBinaryMatrix::from_dense(zd), c), matmul(zd, c));
  }
}

TEST(Knn, TranslationLeavesTableUnchanged) {
  RandomStream rng(4);
  // integer grid coordinates keep translated distances exact
  DenseMatrix x(30, 2);
  for (double& v : x.data()) v = static_cast<double>(rng.below(1000));
  DenseMatrix moved = x;
  for (std::size_t i = 0; i < moved.rows(); ++i) {
    moved(i, 0) += 37.0;
    moved(i, 1) -= 12.0;
  }
  EXPECT_EQ(knn_bruteforce(x, 4), knn_bruteforce(moved, 4));
}

TEST(RandomStream, ReplayTenThousandDraws) {
  RandomStream a(123, {2, 3, 4, purpose::kMonteCarlo});
  RandomStream b(123, {2, 3, 4, purpose::kMonteCarlo});
  for (int k = 0; k < 10000; ++k) ASSERT_EQ(a.next_u64(), b.next_u64());
}
