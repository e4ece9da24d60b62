#include <gtest/gtest.h>

#include <filesystem>

#include "d2ace/experiment/run.hpp"

using namespace d2ace;
namespace fs = std::filesystem;

namespace {

RunConfig micro_config(SelectorKind kind, std::size_t epochs = 3) {
  RunConfig c;
  c.data.format = "synthetic";
  c.data.synthetic_n = 90;
  c.data.synthetic_d = 6;
  c.data.synthetic_q = 3;
  c.model.hidden = 8;
  c.model.batch_size = 16;
  c.model.epochs = epochs;
  c.model.lr = 1e-2;
  c.model.lr_warmup_epochs = 0;
  c.protocol.folds = 3;
  c.selector.kind = kind;
  c.selector.neighbors = 4;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("d2ace_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"epochz", 3}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"model", {{"hiden", 3}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"model", {{"epochs", -1}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json{{"model", {{"epochs", "many"}}}}), ConfigError);
}

TEST(Config, ValidationCatchesBadValues) {
  auto c = micro_config(SelectorKind::Random);
  c.fold = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = micro_config(SelectorKind::Random);
  c.protocol.validation_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = micro_config(SelectorKind::Random);
  c.data.format = "arff";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  auto c = micro_config(SelectorKind::D2ACE, 7);
  c.seed = 42;
  c.selector.lambda1 = 0.3;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(Run, MicroRunRecordsEveryEpoch) {
  const auto m = run(micro_config(SelectorKind::D2ACE, 12));
  EXPECT_EQ(m.status, "ok");
  ASSERT_EQ(m.epochs.size(), 12u);
  EXPECT_EQ(m.n_train + m.n_validation + m.n_test, 90u);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(m.epochs[t].epoch, t + 1);
    EXPECT_EQ(m.epochs[t].warmup, t < 10);
  }
  EXPECT_NEAR(m.epochs[10].pressure, 100.0, 1e-9);
  EXPECT_GE(m.best_epoch, 1u);
}

TEST(Run, ReplayIsBitIdentical) {
  const auto dir = scratch("replay");
  const auto cfg = micro_config(SelectorKind::D2ACE, 3);
  save_run(run(cfg), dir, "r");
  const auto r = replay_manifest(dir / "r.json");
  EXPECT_TRUE(r.identical);
  EXPECT_EQ(metrics_csv(run(cfg)), r.expected_csv);
}

TEST(Run, ManifestJsonRoundTrip) {
  const auto m = run(micro_config(SelectorKind::Random, 2));
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(metrics_csv(back), metrics_csv(m));
  EXPECT_EQ(back.best_epoch, m.best_epoch);
}

TEST(Compare, SummaryMeansMatchCells) {
  CompareConfig cfg;
  cfg.base = micro_config(SelectorKind::Random, 2);
  cfg.selectors = {cfg.base.selector, cfg.base.selector};
  cfg.selectors[1].kind = SelectorKind::DIHCL;
  cfg.workers = 2;
  const auto res = compare(cfg);
  ASSERT_EQ(res.cells.size(), 2u * 3u);
  ASSERT_EQ(res.summary.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    double sum = 0.0;
    int k = 0;
    for (const auto& c : res.cells)
      if (c.selector == s) {
        ASSERT_TRUE(c.ok) << c.error;
        sum += c.manifest.best_test.macro_auc;
        ++k;
      }
    EXPECT_EQ(res.summary[s].runs, 3u);
    EXPECT_NEAR(res.summary[s].mean.macro_auc, sum / k, 1e-12);
  }
  // ranks of two rows are a permutation of {1, 2} or a tie at 1.5
  EXPECT_DOUBLE_EQ(res.summary[0].rank.macro_auc + res.summary[1].rank.macro_auc, 3.0);
}

TEST(Compare, NeedsTwoSelectors) {
  CompareConfig cfg;
  cfg.base = micro_config(SelectorKind::Random);
  cfg.selectors = {cfg.base.selector};
  EXPECT_THROW(compare(cfg), ConfigError);
}

TEST(Ranks, AverageTies) {
  EXPECT_EQ(average_ranks({0.9, 0.7, 0.9}, true), (std::vector<double>{1.5, 3.0, 1.5}));
  EXPECT_EQ(average_ranks({0.1, 0.3, 0.2}, false), (std::vector<double>{1.0, 3.0, 2.0}));
}

TEST(Charts, OneManifestGivesTwoFiles) {
  const auto dir = scratch("charts");
  const auto m = run(micro_config(SelectorKind::Random, 2));
  const auto out = emit_charts({m}, dir);
  EXPECT_EQ(out.files.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "loss.svg"));
  EXPECT_TRUE(fs::exists(dir / "validation.svg"));
  EXPECT_FALSE(fs::exists(dir / "wallclock.svg"));

  auto other = m;
  other.config.selector.kind = SelectorKind::Active;
  EXPECT_EQ(emit_charts({m, other}, dir).files.size(), 3u);
  EXPECT_THROW(emit_charts({}, dir), ConfigError);
}
