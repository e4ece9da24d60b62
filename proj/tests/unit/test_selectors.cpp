#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "d2ace/baselines/selectors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/dataio/synthetic.hpp"
#include "d2ace/model/mlp.hpp"

using namespace d2ace;

namespace {

struct Fixture {
  MultiLabelDataset ds = make_synthetic_dataset(60, 4, 5, 11);
  NeighborTable nb = knn_bruteforce(ds.features, 5);
  SelectorContext ctx(std::size_t batch = 16) const {
    SelectorContext c;
    c.labels = &ds.labels;
    c.neighbors = &nb;
    c.batch_size = batch;
    return c;
  }
};

SelectorConfig config_for(SelectorKind k) {
  SelectorConfig c;
  c.kind = k;
  return c;
}

// Feeds `epochs` snapshots of random predictions and their BCE.
void feed(Selector& s, const SparseBinaryMatrix& y, std::size_t epochs, RandomStream& rng) {
  for (std::size_t t = 1; t <= epochs; ++t) {
    DenseMatrix p(y.rows(), y.cols());
    for (double& v : p.data()) v = clamp_prob(rng.uniform());
    const auto loss = bce_loss_matrix(p, y);
    s.observe({t, &p, &loss});
  }
}

void observe_constant(Selector& s, std::size_t n, std::size_t q, double p, std::size_t epoch) {
  const DenseMatrix probs(n, q, p), loss(n, q, 1.0);
  s.observe({epoch, &probs, &loss});
}

bool covers_each_once(const std::vector<std::vector<std::size_t>>& batches, std::size_t n) {
  std::vector<std::size_t> all;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(n);
  std::iota(expect.begin(), expect.end(), 0);
  return all == expect;
}

}  // namespace

TEST(SelectorKind, NamesRoundTrip) {
  for (auto k : kAllSelectors) EXPECT_EQ(selector_kind_from_string(to_string(k)), k);
  EXPECT_EQ(selector_kind_from_string("hardimb"), SelectorKind::HardImb);
  EXPECT_EQ(selector_kind_from_string("ml_unc"), SelectorKind::MLUnc);
  EXPECT_EQ(selector_kind_from_string("d2ace"), SelectorKind::D2ACE);
  EXPECT_THROW(selector_kind_from_string("greedy"), ConfigError);
}

TEST(Selectors, WarmupMatchesRandom) {
  Fixture f;
  for (auto k : kAllSelectors) {
    auto random = make_selector(config_for(SelectorKind::Random), f.ctx());
    auto sel = make_selector(config_for(k), f.ctx());
    RandomStream feed_rng(1);
    feed(*sel, f.ds.labels, 3, feed_rng);
    for (std::size_t t = 1; t <= 10; ++t) {
      RandomStream a(5, {0, 0, t, purpose::kBatches}), b(5, {0, 0, t, purpose::kBatches});
      const auto pr = random->plan(t, a);
      const auto ps = sel->plan(t, b);
      EXPECT_EQ(pr.batches, ps.batches) << to_string(k) << " epoch " << t;
      EXPECT_EQ(ps.warmup, k != SelectorKind::Random);
    }
  }
}

TEST(Selectors, NoInstanceIsStarved) {
  Fixture f;
  for (auto k : kAllSelectors) {
    auto sel = make_selector(config_for(k), f.ctx());
    RandomStream rng(9);
    feed(*sel, f.ds.labels, 12, rng);
    for (std::size_t t : {11u, 40u, 100u}) {
      const auto plan = sel->plan(t, rng);
      if (k == SelectorKind::Random || k == SelectorKind::Balance) {
        EXPECT_FALSE(plan.distribution.has_value());
        EXPECT_TRUE(covers_each_once(plan.batches, f.ds.n())) << to_string(k);
      } else {
        ASSERT_TRUE(plan.distribution.has_value()) << to_string(k);
        double sum = 0.0;
        for (double p : plan.distribution->probs) {
          EXPECT_GT(p, 0.0) << to_string(k);
          sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(plan.batches.size(), batches_per_epoch(f.ds.n(), 16));
      }
    }
  }
}

TEST(RandomSelector, PermutationBatches) {
  const SparseBinaryMatrix y(2, std::vector<SparseBinaryMatrix::Row>(4));
  SelectorContext ctx;
  ctx.labels = &y;
  ctx.batch_size = 2;
  auto sel = make_selector(config_for(SelectorKind::Random), ctx);
  RandomStream a(1), b(2);
  const auto pa = sel->plan(50, a);
  EXPECT_EQ(pa.batches.size(), 2u);
  EXPECT_TRUE(covers_each_once(pa.batches, 4));

  Fixture f;
  auto big = make_selector(config_for(SelectorKind::Random), f.ctx());
  RandomStream c(1), d(2);
  EXPECT_NE(big->plan(1, c).batches, big->plan(1, d).batches);
}

TEST(ActiveSelector, VarianceOracles) {
  const SparseBinaryMatrix y(2, std::vector<SparseBinaryMatrix::Row>(3));
  SelectorContext ctx;
  ctx.labels = &y;
  auto cfg = config_for(SelectorKind::Active);
  ActiveSelector constant(cfg, ctx);
  for (std::size_t t = 1; t <= 4; ++t) observe_constant(constant, 3, 2, 0.3, t);
  for (double w : constant.weights()) EXPECT_NEAR(w, 2 * 0.1 / 2.0, 1e-12);

  ActiveSelector alternating(cfg, ctx);
  for (std::size_t t = 1; t <= 4; ++t) observe_constant(alternating, 3, 2, t % 2 ? 1.0 : 0.0, t);
  for (double w : alternating.weights()) EXPECT_NEAR(w, 2 * (0.25 + 0.1 / 2.0), 1e-12);
}

TEST(ActiveSelector, PermutationEquivariant) {
  Fixture f;
  RandomStream rng(3);
  const auto perm = rng.permutation(f.ds.n());
  const auto yp = f.ds.labels.select_rows(perm);
  SelectorContext c1 = f.ctx(), c2 = f.ctx();
  c2.labels = &yp;
  ActiveSelector a(config_for(SelectorKind::Active), c1), b(config_for(SelectorKind::Active), c2);
  for (std::size_t t = 1; t <= 5; ++t) {
    DenseMatrix p(f.ds.n(), f.ds.q());
    for (double& v : p.data()) v = rng.uniform();
    const auto pp = p.select_rows(perm);
    a.observe({t, &p, &p});
    b.observe({t, &pp, &pp});
  }
  const auto wa = a.weights(), wb = b.weights();
  for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_EQ(wb[k], wa[perm[k]]);
}

TEST(RecentSelector, EntropyOracles) {
  EXPECT_NEAR(RecentSelector::frequency_entropy(0.4), 0.970951, 1e-6);
  EXPECT_NEAR(RecentSelector::frequency_entropy(0.4), -(0.4 * std::log2(0.4) + 0.6 * std::log2(0.6)), 1e-15);

  const SparseBinaryMatrix y(1, std::vector<SparseBinaryMatrix::Row>(2));
  SelectorContext ctx;
  ctx.labels = &y;
  RecentSelector alt(config_for(SelectorKind::Recent), ctx);
  const double seq[] = {0.1, 0.9, 0.2, 0.8, 0.3};
  for (std::size_t t = 0; t < 5; ++t) observe_constant(alt, 2, 1, seq[t], t + 1);
  for (double w : alt.weights()) EXPECT_NEAR(w, 0.970951, 1e-6);

  RecentSelector same(config_for(SelectorKind::Recent), ctx);
  for (std::size_t t = 1; t <= 5; ++t) observe_constant(same, 2, 1, 0.8, t);
  for (double w : same.weights()) EXPECT_EQ(w, 0.0);

  auto one = config_for(SelectorKind::Recent);
  one.window = 1;
  RecentSelector degenerate(one, ctx);
  for (std::size_t t = 0; t < 5; ++t) observe_constant(degenerate, 2, 1, seq[t], t + 1);
  for (double w : degenerate.weights()) EXPECT_EQ(w, 0.0);
}

TEST(DihclSelector, RewardRecurrence) {
  const SparseBinaryMatrix y(1, std::vector<SparseBinaryMatrix::Row>(3));
  SelectorContext ctx;
  ctx.labels = &y;
  DihclSelector s(config_for(SelectorKind::DIHCL), ctx);
  const DenseMatrix p(3, 1, 0.5);
  const DenseMatrix l0(3, 1, 1.0), l1{{2.0}, {1.0}, {1.0}};
  s.observe({1, &p, &l0});
  s.observe({2, &p, &l1});
  EXPECT_EQ(s.rewards()[0], 1.0);
  // identical losses from here on: rewards decay geometrically
  for (int k = 1; k <= 5; ++k) {
    s.observe({static_cast<std::size_t>(2 + k), &p, &l1});
    EXPECT_NEAR(s.rewards()[0], std::pow(0.95, k), 1e-15);
  }

  auto g0 = config_for(SelectorKind::DIHCL);
  g0.gamma = 0.0;
  DihclSelector z(g0, ctx);
  const DenseMatrix l2{{0.5}, {4.0}, {1.0}};
  z.observe({1, &p, &l0});
  z.observe({2, &p, &l1});
  z.observe({3, &p, &l2});
  EXPECT_EQ(z.rewards(), (std::vector<double>{1.5, 3.0, 0.0}));
}

TEST(DihclSelector, PersistentChangeDominates) {
  const SparseBinaryMatrix y(1, std::vector<SparseBinaryMatrix::Row>(10));
  SelectorContext ctx;
  ctx.labels = &y;
  auto cfg = config_for(SelectorKind::DIHCL);
  cfg.exp3_eta = 5.0;
  DihclSelector s(cfg, ctx);
  const DenseMatrix p(10, 1, 0.5);
  for (std::size_t t = 1; t <= 20; ++t) {
    DenseMatrix l(10, 1, 1.0);
    l(3, 0) = t % 2 ? 3.0 : 1.0;
    s.observe({t, &p, &l});
  }
  const auto d = s.distribution();
  const auto top = std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin();
  EXPECT_EQ(top, 3);
  EXPECT_GT(d.probs[3], 0.9);
  EXPECT_GE(*std::min_element(d.probs.begin(), d.probs.end()), 0.05 / 10.0);
}

TEST(BalanceSelector, BalancedLabelSplitsEvenly) {
  std::vector<SparseBinaryMatrix::Row> rows(40);
  for (std::size_t i = 0; i < 20; ++i) rows[i] = {0};
  const SparseBinaryMatrix y(1, rows);
  SelectorContext ctx;
  ctx.labels = &y;
  ctx.batch_size = 8;
  BalanceSelector s(config_for(SelectorKind::Balance), ctx);
  RandomStream rng(2);
  const auto batches = s.balanced_batches(rng);
  EXPECT_TRUE(covers_each_once(batches, 40));
  for (const auto& b : batches) {
    long pos = 0;
    for (auto i : b) pos += y.get(i, 0);
    EXPECT_LE(std::abs(pos - static_cast<long>(b.size()) / 2), 1);
  }
}

TEST(BalanceSelector, InfeasibleBalanceStillFills) {
  const SparseBinaryMatrix all_pos(1, std::vector<SparseBinaryMatrix::Row>(10, {0}));
  SelectorContext ctx;
  ctx.labels = &all_pos;
  ctx.batch_size = 4;
  BalanceSelector s(config_for(SelectorKind::Balance), ctx);
  RandomStream rng(1);
  const auto batches = s.balanced_batches(rng);
  EXPECT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[1].size(), 4u);
  EXPECT_TRUE(covers_each_once(batches, 10));

  const SparseBinaryMatrix four(1, {{0}, {0}, {}, {}});
  ctx.labels = &four;
  BalanceSelector small(config_for(SelectorKind::Balance), ctx);
  const auto one = small.balanced_batches(rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(covers_each_once(one, 4));
}

TEST(HardImbSelector, StaticWeightCalibration) {
  // label 0 balanced; every instance's neighbors share its value
  const SparseBinaryMatrix y(1, {{0}, {0}, {}, {}});
  const NeighborTable nb{1, {{1}, {0}, {3}, {2}}};
  const auto w = HardImbSelector::static_weights(y, nb);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(w(i, 0), 1.0);

  // neighbors all disagree -> local factor 1 (maximal)
  const NeighborTable cross{2, {{2, 3}, {2, 3}, {0, 1}, {0, 1}}};
  const auto wc = HardImbSelector::static_weights(y, cross);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(wc(i, 0), 0.5 + 0.5 * 2.0);

  // minority class gets the larger global factor
  const SparseBinaryMatrix skew(1, {{0}, {}, {}, {}});
  const NeighborTable self_like{1, {{1}, {2}, {3}, {1}}};
  const auto ws = HardImbSelector::static_weights(skew, self_like);
  EXPECT_GT(ws(0, 0), ws(1, 0));
  EXPECT_NEAR(ws(0, 0), 0.5 * 3.0 + 0.5 * 2.0, 1e-15);
}

TEST(HardImbSelector, ZeroLossGivesUniform) {
  Fixture f;
  HardImbSelector s(config_for(SelectorKind::HardImb), f.ctx());
  const DenseMatrix p(f.ds.n(), f.ds.q(), 0.5), zero(f.ds.n(), f.ds.q(), 0.0);
  s.observe({11, &p, &zero});
  for (double w : s.weights()) EXPECT_EQ(w, 0.0);
  RandomStream rng(1);
  const auto plan = s.plan(11, rng);
  for (double pr : plan.distribution->probs) EXPECT_NEAR(pr, 1.0 / 60.0, 1e-15);
}

TEST(MlUncSelector, MutualInformationOracle) {
  // q = 2, n = 6; label 1 copies label 0 except in the last row
  const DenseMatrix b{{1, 1}, {1, 1}, {0, 0}, {0, 0}, {1, 1}, {0, 1}};
  const auto c = mutual_information_correlation(b);
  // smoothed 2x2 table: n11 = 3+1, n10 = 0+1, n01 = 1+1, n00 = 2+1, total 10
  const double t = 10.0, n11 = 4, n10 = 1, n01 = 2, n00 = 3;
  const double pj = (n11 + n10) / t, pk = (n11 + n01) / t;
  const double mi = n11 / t * std::log(n11 / t / (pj * pk)) + n10 / t * std::log(n10 / t / (pj * (1 - pk))) +
                    n01 / t * std::log(n01 / t / ((1 - pj) * pk)) +
                    n00 / t * std::log(n00 / t / ((1 - pj) * (1 - pk)));
  auto h = [](double p) { return -(p * std::log(p) + (1 - p) * std::log(1 - p)); };
  EXPECT_NEAR(c(0, 1), mi / std::min(h(pj), h(pk)), 1e-15);
  EXPECT_EQ(c(0, 1), c(1, 0));
  EXPECT_EQ(c(0, 0), 1.0);
}

TEST(MlUncSelector, CorrelatedColumnsAmplifiedSymmetrically) {
  const DenseMatrix b{{1, 1, 0}, {0, 0, 0}, {1, 1, 1}, {0, 0, 1}, {1, 1, 0}, {0, 0, 1}};
  const auto c = mutual_information_correlation(b);
  EXPECT_GT(c(0, 1), c(0, 2));
  EXPECT_GT(c(0, 1), c(1, 2) - 1e-15);
  EXPECT_EQ(c(0, 2), c(1, 2));
  EXPECT_TRUE(is_symmetric(c));
}

TEST(MlUncSelector, MatchesDegenerateWeighting) {
  Fixture f;
  MLUncSelector s(config_for(SelectorKind::MLUnc), f.ctx());
  RandomStream rng(8);
  feed(s, f.ds.labels, 6, rng);
  const auto c = s.correlation();
  ASSERT_TRUE(is_symmetric(c));
  const auto w = s.weights();
  const auto oracle = mlunc_degenerate_weights(s.history().uncertainty(), c);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], oracle[i], 1e-10);
}

TEST(MlUncSelector, IndependentLabelsGiveRowSums) {
  const DenseMatrix u{{0.2, 0.7}, {0.5, 0.1}};
  const auto w = row_sums(matmul(u, DenseMatrix::identity(2)));
  EXPECT_EQ(w, row_sums(u));
}

TEST(D2aceSelector, FirstSelectedEpoch) {
  Fixture f;
  D2aceSelector s(config_for(SelectorKind::D2ACE), f.ctx());
  RandomStream rng(4);
  feed(s, f.ds.labels, 11, rng);
  const auto w = s.weights();
  for (const auto* iw : {&w.uncertainty, &w.hardness})
    for (double v : iw->normalized) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  const auto plan = s.plan(11, rng);
  EXPECT_FALSE(plan.warmup);
  EXPECT_NEAR(plan.pressure, 100.0, 1e-9);
  EXPECT_EQ(plan.p_beta, 0.7);
  // every relevant label of an instance appears in its local neighbourhood
  for (std::size_t i = 0; i < f.ds.n(); ++i)
    for (std::size_t j : f.ds.labels.row(i)) EXPECT_TRUE(s.local_labels().get(i, j));
}

TEST(D2aceSelector, NeedsNeighbors) {
  Fixture f;
  auto ctx = f.ctx();
  ctx.neighbors = nullptr;
  EXPECT_THROW(make_selector(config_for(SelectorKind::D2ACE), ctx), ConfigError);
  EXPECT_THROW(make_selector(config_for(SelectorKind::HardImb), ctx), ConfigError);
  EXPECT_TRUE(needs_neighbors(SelectorKind::D2ACE));
  EXPECT_FALSE(needs_neighbors(SelectorKind::MLUnc));
}

TEST(Selectors, PlanBeforeObserveIsContractError) {
  Fixture f;
  auto s = make_selector(config_for(SelectorKind::Recent), f.ctx());
  RandomStream rng(1);
  EXPECT_THROW(s->plan(20, rng), ContractError);
}
