#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2ace/baselines/selectors.hpp"
#include "d2ace/core/knn.hpp"
#include "d2ace/core/random_stream.hpp"
#include "d2ace/dataio/dataset.hpp"
#include "d2ace/dataio/folds.hpp"
#include "d2ace/dataio/scaler.hpp"
#include "d2ace/eval/metrics.hpp"
#include "d2ace/experiment/config.hpp"
#include "d2ace/model/mlp.hpp"

namespace d2ace {

struct MetricRow {
  double macro_auc = std::numeric_limits<double>::quiet_NaN();
  double macro_f1 = std::numeric_limits<double>::quiet_NaN();
  double ranking_loss = std::numeric_limits<double>::quiet_NaN();
  double map = std::numeric_limits<double>::quiet_NaN();
};

struct EpochRecord {
  std::size_t epoch = 0;
  bool warmup = false;
  double pressure = std::numeric_limits<double>::quiet_NaN();
  double p_beta = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
  std::size_t batches = 0;
  std::size_t distinct = 0;  // distinct training instances touched this epoch
  double batch_loss = 0.0;   // mean weighted batch loss during the epoch
  double train_loss = 0.0;   // full-pass mean instance loss at epoch start
  MetricRow val;
  MetricRow test;
  double selector_s = 0.0;   // snapshot forward pass + observe + plan
  double trainer_s = 0.0;    // backward/update over all batches
  double eval_s = 0.0;
};

struct RunManifest {
  RunConfig config;
  nlohmann::json dataset;
  std::string status = "ok";  // ok | diverged
  std::string error;
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
  std::vector<std::size_t> fold_label_spread;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch has a validation AUC
  MetricRow best_test;
  double wall_clock_s = 0.0;
};

/// Shared per-(dataset, seed, run) state: fold assignment.
inline FoldAssignment make_folds(const MultiLabelDataset& ds, const RunConfig& cfg) {
  RandomStream rng(cfg.seed, {cfg.run, 0, 0, purpose::kFolds});
  return cfg.protocol.stratified ? stratify_folds(ds.labels, cfg.protocol.folds, rng)
                                 : random_folds(ds.n(), cfg.protocol.folds, rng);
}

/// Metrics that tolerate a split where no label has both classes.
inline MetricRow safe_evaluate(const DenseMatrix& scores, const SparseBinaryMatrix& labels, double threshold) {
  MetricRow m;
  try {
    m.macro_auc = macro_auc(scores, labels);
  } catch (const EvaluationError&) {
  }
  m.macro_f1 = macro_f1(scores, labels, threshold);
  m.ranking_loss = ranking_loss(scores, labels);
  m.map = mean_average_precision(scores, labels);
  return m;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline NeighborTable neighbors_for(const DenseMatrix& train_x, const SparseBinaryMatrix& train_y, std::size_t k,
                                   const std::filesystem::path& cache_dir) {
  const std::size_t kk = std::min(k, train_x.rows() - 1);
  if (cache_dir.empty()) return knn_bruteforce(train_x, kk);
  const MultiLabelDataset key{"", train_x, train_y, {}, {}};
  const auto h = content_hash(key);
  const auto path = cache_dir / ("knn-" + hash_hex(h) + "-k" + std::to_string(kk) + ".csv");
  if (auto cached = read_knn_cache(path, h, kk)) return *cached;
  auto table = knn_bruteforce(train_x, kk);
  std::filesystem::create_directories(cache_dir);
  write_knn_cache(path, table, h);
  return table;
}

inline double mean_row_loss(const DenseMatrix& loss) {
  const auto rs = row_sums(loss);
  double s = 0.0;
  for (double v : rs) s += v;
  return s / static_cast<double>(rs.size());
}

}  // namespace detail

/// One training run on one fold: Algorithm-1 style loop with per-epoch
/// validation and best-epoch test reporting. A non-finite gradient stops
/// the run and returns the partial manifest with status "diverged".
inline RunManifest run_fold(const MultiLabelDataset& ds, const FoldAssignment& folds, const RunConfig& cfg) {
  cfg.validate();
  if (folds.folds != cfg.protocol.folds || folds.fold_of.size() != ds.n())
    throw ConfigError("fold assignment does not match the dataset/config");
  const auto t_run = std::chrono::steady_clock::now();
  RunManifest man;
  man.config = cfg;
  man.dataset = dataset_manifest(ds);
  man.fold_label_spread = folds.label_spread(ds.labels);

  const auto test_idx = folds.members(cfg.fold);
  RandomStream split_rng(cfg.seed, {cfg.run, cfg.fold, 0, purpose::kValidationSplit});
  const auto split = holdout_split(folds.complement(cfg.fold), cfg.protocol.validation_fraction, split_rng);
  man.n_train = split.train.size();
  man.n_validation = split.validation.size();
  man.n_test = test_idx.size();

  const auto train = ds.subset(split.train);
  const auto val = ds.subset(split.validation);
  const auto test = ds.subset(test_idx);
  DenseMatrix xtr = train.features, xva = val.features, xte = test.features;
  if (cfg.protocol.standardize) {
    const auto scaler = FeatureScaler::fit(xtr);
    xtr = scaler.transform(xtr);
    xva = scaler.transform(xva);
    xte = scaler.transform(xte);
  }

  std::optional<NeighborTable> nb;
  if (needs_neighbors(cfg.selector.kind))
    nb = detail::neighbors_for(xtr, train.labels, cfg.selector.neighbors, cfg.protocol.knn_cache_dir);

  RandomStream init_rng(cfg.seed, {cfg.run, cfg.fold, 0, purpose::kInit});
  MlpModel model({ds.d(), cfg.model.hidden, ds.q()}, init_rng);
  AdamState adam(model.parameter_count(), cfg.model.adam);
  const LrSchedule lr{cfg.model.lr, cfg.model.lr_warmup_epochs};

  SelectorContext ctx{&train.labels, nb ? &*nb : nullptr, cfg.model.batch_size, cfg.effective_schedule()};
  auto selector = make_selector(cfg.selector, ctx);
  const std::size_t n = train.n();
  double best_auc = -std::numeric_limits<double>::infinity();

  for (std::size_t t = 1; t <= cfg.model.epochs; ++t) {
    EpochRecord rec;
    rec.epoch = t;
    rec.lr = lr.at(t);

    auto t0 = std::chrono::steady_clock::now();
    const auto probs = model.forward(xtr);
    const auto loss = bce_loss_matrix(probs, train.labels);
    rec.train_loss = detail::mean_row_loss(loss);
    selector->observe({t, &probs, &loss});
    RandomStream batch_rng(cfg.seed, {cfg.run, cfg.fold, t, purpose::kBatches});
    const auto plan = selector->plan(t, batch_rng);
    rec.selector_s = detail::seconds_since(t0);
    rec.warmup = plan.warmup;
    rec.pressure = plan.pressure;
    rec.p_beta = plan.p_beta;
    rec.batches = plan.batches.size();

    t0 = std::chrono::steady_clock::now();
    std::vector<char> touched(n, 0);
    double loss_sum = 0.0;
    try {
      for (const auto& batch : plan.batches) {
        std::vector<double> w(batch.size(), 1.0);
        if (cfg.model.importance_correction && plan.distribution)
          for (std::size_t k = 0; k < batch.size(); ++k)
            w[k] = 1.0 / (static_cast<double>(n) * plan.distribution->probs[batch[k]]);
        for (std::size_t i : batch) touched[i] = 1;
        const double l = backward_and_update(model, adam, xtr.select_rows(batch), train.labels.select_rows(batch), w,
                                             rec.lr);
        if (!std::isfinite(l)) throw TrainingError("non-finite batch loss at epoch " + std::to_string(t));
        loss_sum += l;
      }
    } catch (const TrainingError& e) {
      man.status = "diverged";
      man.error = e.what();
      break;
    }
    rec.batch_loss = rec.batches ? loss_sum / static_cast<double>(rec.batches) : 0.0;
    rec.distinct = static_cast<std::size_t>(std::count(touched.begin(), touched.end(), 1));
    rec.trainer_s = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    rec.val = safe_evaluate(model.forward(xva), val.labels, cfg.protocol.f1_threshold);
    rec.test = safe_evaluate(model.forward(xte), test.labels, cfg.protocol.f1_threshold);
    rec.eval_s = detail::seconds_since(t0);
    if (!std::isnan(rec.val.macro_auc) && rec.val.macro_auc > best_auc) {
      best_auc = rec.val.macro_auc;
      man.best_epoch = t;
      man.best_test = rec.test;
    }
    man.epochs.push_back(rec);
  }
  man.wall_clock_s = detail::seconds_since(t_run);
  return man;
}

/// Loads the dataset, builds folds and runs the configured fold.
inline RunManifest run(const RunConfig& cfg) {
  cfg.validate();
  const auto ds = load_dataset(cfg.data);
  return run_fold(ds, make_folds(ds, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json metric_json(const MetricRow& m) {
  auto num = [](double v) -> nlohmann::json { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"macro_auc", num(m.macro_auc)}, {"macro_f1", num(m.macro_f1)},
          {"ranking_loss", num(m.ranking_loss)}, {"map", num(m.map)}};
}

inline double num_or_nan(const nlohmann::json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

inline MetricRow metric_from_json(const nlohmann::json& j) {
  return {num_or_nan(j.at("macro_auc")), num_or_nan(j.at("macro_f1")), num_or_nan(j.at("ranking_loss")),
          num_or_nan(j.at("map"))};
}

}  // namespace detail

inline constexpr const char* kMetricsCsvHeader =
    "epoch,phase,pressure,p_beta,lr,batches,distinct,batch_loss,train_loss,"
    "val_macro_auc,val_macro_f1,val_ranking_loss,val_map,"
    "test_macro_auc,test_macro_f1,test_ranking_loss,test_map";

/// Per-epoch metrics without any timing column, so equal runs give equal
/// bytes.
inline std::string metrics_csv(const RunManifest& m) {
  using detail::fmt;
  std::ostringstream os;
  os << kMetricsCsvHeader << "\n";
  for (const auto& e : m.epochs) {
    os << e.epoch << "," << (e.warmup ? "warmup" : (m.config.selector.kind == SelectorKind::Random ? "random" : "selected"))
       << "," << fmt(e.pressure) << "," << fmt(e.p_beta) << "," << fmt(e.lr) << "," << e.batches << "," << e.distinct
       << "," << fmt(e.batch_loss) << "," << fmt(e.train_loss);
    for (const auto* r : {&e.val, &e.test})
      os << "," << fmt(r->macro_auc) << "," << fmt(r->macro_f1) << "," << fmt(r->ranking_loss) << "," << fmt(r->map);
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json epochs = nlohmann::json::array();
  double sel = 0.0, trn = 0.0;
  for (const auto& e : m.epochs) {
    auto num = [](double v) -> nlohmann::json { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    epochs.push_back({{"epoch", e.epoch},
                      {"warmup", e.warmup},
                      {"pressure", num(e.pressure)},
                      {"p_beta", num(e.p_beta)},
                      {"lr", e.lr},
                      {"batches", e.batches},
                      {"distinct", e.distinct},
                      {"batch_loss", e.batch_loss},
                      {"train_loss", e.train_loss},
                      {"val", detail::metric_json(e.val)},
                      {"test", detail::metric_json(e.test)},
                      {"selector_s", e.selector_s},
                      {"trainer_s", e.trainer_s},
                      {"eval_s", e.eval_s}});
    sel += e.selector_s;
    trn += e.trainer_s;
  }
  return {{"config", to_json(m.config)},
          {"dataset", m.dataset},
          {"status", m.status},
          {"error", m.error},
          {"split",
           {{"train", m.n_train},
            {"validation", m.n_validation},
            {"test", m.n_test},
            {"fold_label_spread", m.fold_label_spread}}},
          {"epochs", epochs},
          {"best_epoch", m.best_epoch},
          {"best_test", detail::metric_json(m.best_test)},
          {"wall_clock",
           {{"total_s", m.wall_clock_s}, {"selector_s", sel}, {"trainer_s", trn}}}};
}

/// Inverse of to_json for the fields that matter to summaries and charts.
inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config = run_config_from_json(j.at("config"));
  m.dataset = j.at("dataset");
  m.status = j.value("status", "ok");
  m.error = j.value("error", "");
  m.best_epoch = j.at("best_epoch").get<std::size_t>();
  m.best_test = detail::metric_from_json(j.at("best_test"));
  m.wall_clock_s = j.at("wall_clock").at("total_s").get<double>();
  for (const auto& e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at("epoch").get<std::size_t>();
    r.warmup = e.at("warmup").get<bool>();
    r.pressure = detail::num_or_nan(e.at("pressure"));
    r.p_beta = detail::num_or_nan(e.at("p_beta"));
    r.lr = e.at("lr").get<double>();
    r.batches = e.at("batches").get<std::size_t>();
    r.distinct = e.at("distinct").get<std::size_t>();
    r.batch_loss = e.at("batch_loss").get<double>();
    r.train_loss = e.at("train_loss").get<double>();
    r.val = detail::metric_from_json(e.at("val"));
    r.test = detail::metric_from_json(e.at("test"));
    r.selector_s = e.at("selector_s").get<double>();
    r.trainer_s = e.at("trainer_s").get<double>();
    r.eval_s = e.at("eval_s").get<double>();
    m.epochs.push_back(r);
  }
  return m;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes <stem>.json and <stem>.csv into `dir`.
inline void save_run(const RunManifest& m, const std::filesystem::path& dir, const std::string& stem) {
  auto j = to_json(m);
  j["metrics_csv"] = stem + ".csv";
  write_text(dir / (stem + ".json"), j.dump(2) + "\n");
  write_text(dir / (stem + ".csv"), metrics_csv(m));
}

struct ReplayResult {
  bool identical = false;
  std::string expected_csv;
  std::string replayed_csv;
};

/// Re-runs the configuration stored in a manifest and compares the metrics
/// CSV byte for byte against `csv_path` (default: the manifest's sibling).
inline ReplayResult replay_manifest(const std::filesystem::path& manifest_path,
                                    std::filesystem::path csv_path = {}) {
  const auto j = read_json_file(manifest_path);
  if (csv_path.empty())
    csv_path = manifest_path.parent_path() / j.value("metrics_csv", manifest_path.stem().string() + ".csv");
  ReplayResult r;
  r.expected_csv = read_text(csv_path);
  r.replayed_csv = metrics_csv(run(run_config_from_json(j.at("config"))));
  r.identical = r.expected_csv == r.replayed_csv;
  return r;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct CompareCell {
  std::size_t selector = 0;  // index into CompareConfig::selectors
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  bool ok = false;
  std::string error;
  RunManifest manifest;
};

struct SummaryRow {
  std::string selector;
  std::size_t runs = 0;
  std::size_t failed = 0;
  MetricRow mean;
  MetricRow rank;
};

struct CompareResult {
  std::vector<CompareCell> cells;
  std::vector<SummaryRow> summary;
};

/// Average ranks (1 = best); ties share the mean of their positions. NaN
/// values rank last.
inline std::vector<double> average_ranks(const std::vector<double>& v, bool higher_is_better) {
  const std::size_t m = v.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    if (std::isnan(v[i])) return std::numeric_limits<double>::infinity();
    return higher_is_better ? -v[i] : v[i];
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<double> rank(m);
  for (std::size_t a = 0; a < m;) {
    std::size_t b = a;
    while (b < m && key(order[b]) == key(order[a])) ++b;
    const double r = 0.5 * static_cast<double>(a + 1 + b);
    for (std::size_t k = a; k < b; ++k) rank[order[k]] = r;
    a = b;
  }
  return rank;
}

inline std::vector<SummaryRow> summarize(const std::vector<CompareCell>& cells,
                                         const std::vector<SelectorConfig>& selectors) {
  std::vector<SummaryRow> rows(selectors.size());
  for (std::size_t s = 0; s < selectors.size(); ++s) {
    auto& r = rows[s];
    r.selector = std::string(to_string(selectors[s].kind));
    double sums[4] = {0, 0, 0, 0};
    std::size_t counts[4] = {0, 0, 0, 0};
    for (const auto& c : cells) {
      if (c.selector != s) continue;
      if (!c.ok) {
        ++r.failed;
        continue;
      }
      ++r.runs;
      const auto& t = c.manifest.best_test;
      const double vals[4] = {t.macro_auc, t.macro_f1, t.ranking_loss, t.map};
      for (int k = 0; k < 4; ++k)
        if (!std::isnan(vals[k])) {
          sums[k] += vals[k];
          ++counts[k];
        }
    }
    auto mean = [&](int k) { return counts[k] ? sums[k] / static_cast<double>(counts[k]) : std::nan(""); };
    r.mean = {mean(0), mean(1), mean(2), mean(3)};
  }
  auto column = [&](double MetricRow::*f) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.mean.*f);
    return v;
  };
  const auto ra = average_ranks(column(&MetricRow::macro_auc), true);
  const auto rf = average_ranks(column(&MetricRow::macro_f1), true);
  const auto rl = average_ranks(column(&MetricRow::ranking_loss), false);
  const auto rm = average_ranks(column(&MetricRow::map), true);
  for (std::size_t s = 0; s < rows.size(); ++s) rows[s].rank = {ra[s], rf[s], rl[s], rm[s]};
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  using detail::fmt;
  std::ostringstream os;
  os << "selector,runs,failed,macro_auc,macro_f1,ranking_loss,map,"
        "rank_macro_auc,rank_macro_f1,rank_ranking_loss,rank_map,avg_rank\n";
  for (const auto& r : rows) {
    const double avg = (r.rank.macro_auc + r.rank.macro_f1 + r.rank.ranking_loss + r.rank.map) / 4.0;
    os << r.selector << "," << r.runs << "," << r.failed << "," << fmt(r.mean.macro_auc) << "," << fmt(r.mean.macro_f1)
       << "," << fmt(r.mean.ranking_loss) << "," << fmt(r.mean.map) << "," << fmt(r.rank.macro_auc) << ","
       << fmt(r.rank.macro_f1) << "," << fmt(r.rank.ranking_loss) << "," << fmt(r.rank.map) << "," << fmt(avg) << "\n";
  }
  return os.str();
}

inline std::string cell_stem(const CompareCell& c, const std::vector<SelectorConfig>& selectors) {
  std::string name(to_string(selectors[c.selector].kind));
  std::replace(name.begin(), name.end(), '-', '_');
  return name + "_s" + std::to_string(c.selector) + "_seed" + std::to_string(c.seed) + "_fold" + std::to_string(c.fold);
}

/// Runs every (selector, seed, fold) cell on a worker pool. Failed cells are
/// recorded and the rest continue.
inline CompareResult compare(const CompareConfig& cfg) {
  cfg.validate();
  const auto ds = load_dataset(cfg.base.data);
  std::vector<std::size_t> fold_list = cfg.folds;
  if (fold_list.empty()) {
    fold_list.resize(cfg.base.protocol.folds);
    std::iota(fold_list.begin(), fold_list.end(), 0);
  }
  std::vector<FoldAssignment> fold_sets;
  for (auto seed : cfg.seeds) {
    auto c = cfg.base;
    c.seed = seed;
    fold_sets.push_back(make_folds(ds, c));
  }

  CompareResult res;
  for (std::size_t s = 0; s < cfg.selectors.size(); ++s)
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
      for (std::size_t f : fold_list) {
        CompareCell c;
        c.selector = s;
        c.seed = cfg.seeds[si];
        c.fold = f;
        res.cells.push_back(std::move(c));
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < res.cells.size();) {
      auto& cell = res.cells[k];
      try {
        auto c = cfg.base;
        c.seed = cell.seed;
        c.fold = cell.fold;
        c.selector = cfg.selectors[cell.selector];
        const std::size_t si = static_cast<std::size_t>(
            std::find(cfg.seeds.begin(), cfg.seeds.end(), cell.seed) - cfg.seeds.begin());
        cell.manifest = run_fold(ds, fold_sets[si], c);
        cell.ok = cell.manifest.status == "ok";
        if (!cell.ok) cell.error = cell.manifest.error;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  std::size_t nw = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  nw = std::min(nw, res.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  res.summary = summarize(res.cells, cfg.selectors);
  return res;
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

struct ChartSeries {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[k % 10];
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string line_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<ChartSeries>& series) {
  using detail::svg_num;
  const double W = 760, H = 440, L = 70, R = 190, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::max(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isnan(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::xml_escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    const double xv = x0 + (x1 - x0) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << svg_num(py(yv) + 4) << "\" text-anchor=\"end\">" << svg_num(yv) << "</text>\n";
    os << "<text x=\"" << svg_num(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << svg_num(xv) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << detail::xml_escape(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\">" << detail::xml_escape(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << detail::palette(s) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k)
      if (!std::isnan(series[s].y[k])) os << svg_num(px(series[s].x[k])) << "," << svg_num(py(series[s].y[k])) << " ";
    os << "\"/>\n";
    const double ly = T + 14.0 * static_cast<double>(s) + 6;
    os << "<rect class=\"legend\" x=\"" << W - R + 12 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
       << detail::palette(s) << "\"/>\n";
    os << "<text x=\"" << W - R + 28 << "\" y=\"" << ly + 1 << "\">" << detail::xml_escape(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string bar_chart_svg(const std::string& title, const std::string& ylabel,
                                 const std::vector<std::pair<std::string, double>>& bars) {
  using detail::svg_num;
  const double W = 760, H = 440, L = 70, R = 20, T = 40, B = 70;
  double top = 0.0;
  for (const auto& b : bars) top = std::max(top, b.second);
  if (!(top > 0.0)) top = 1.0;
  const double slot = (W - L - R) / static_cast<double>(std::max<std::size_t>(1, bars.size()));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::xml_escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\">" << detail::xml_escape(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double h = bars[k].second / top * (H - T - B);
    const double x = L + slot * static_cast<double>(k) + slot * 0.15;
    os << "<rect class=\"bar\" x=\"" << svg_num(x) << "\" y=\"" << svg_num(H - B - h) << "\" width=\"" << svg_num(slot * 0.7)
       << "\" height=\"" << svg_num(h) << "\" fill=\"" << detail::palette(k) << "\"/>\n";
    os << "<text x=\"" << svg_num(x + slot * 0.35) << "\" y=\"" << svg_num(H - B - h - 4) << "\" text-anchor=\"middle\">"
       << svg_num(bars[k].second) << "</text>\n";
    os << "<text x=\"" << svg_num(x + slot * 0.35) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << detail::xml_escape(bars[k].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

struct ChartOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

inline std::string series_label(const RunManifest& m) {
  return std::string(to_string(m.config.selector.kind)) + " seed" + std::to_string(m.config.seed) + " fold" +
         std::to_string(m.config.fold);
}

/// loss.svg and validation.svg with one series per manifest, plus
/// wallclock.svg (mean selector + trainer seconds per selector) when more
/// than one selector is present. Series with no finite value are left out.
inline ChartOutput emit_charts(const std::vector<RunManifest>& manifests, const std::filesystem::path& dir) {
  if (manifests.empty()) throw ConfigError("emit_charts: no manifests");
  ChartOutput out;
  auto build = [&](const char* what, auto value) {
    std::vector<ChartSeries> series;
    for (const auto& m : manifests) {
      ChartSeries s{series_label(m), {}, {}};
      bool any = false;
      for (const auto& e : m.epochs) {
        s.x.push_back(static_cast<double>(e.epoch));
        s.y.push_back(value(e));
        any = any || !std::isnan(s.y.back());
      }
      if (any) series.push_back(std::move(s));
      else out.warnings.push_back(std::string(what) + ": no values for '" + s.label + "', series omitted");
    }
    return series;
  };
  std::filesystem::create_directories(dir);
  const auto loss = build("loss", [](const EpochRecord& e) { return e.train_loss; });
  write_text(dir / "loss.svg", line_chart_svg("Training loss", "epoch", "mean instance loss", loss));
  out.files.push_back(dir / "loss.svg");
  const auto val = build("validation", [](const EpochRecord& e) { return e.val.macro_auc; });
  write_text(dir / "validation.svg", line_chart_svg("Validation Macro-AUC", "epoch", "Macro-AUC", val));
  out.files.push_back(dir / "validation.svg");

  std::vector<std::pair<std::string, double>> bars;
  std::vector<std::size_t> counts;
  for (const auto& m : manifests) {
    double secs = 0.0;
    for (const auto& e : m.epochs) secs += e.selector_s + e.trainer_s;
    const std::string name(to_string(m.config.selector.kind));
    auto it = std::find_if(bars.begin(), bars.end(), [&](const auto& b) { return b.first == name; });
    if (it == bars.end()) {
      bars.emplace_back(name, secs);
      counts.push_back(1);
    } else {
      it->second += secs;
      ++counts[static_cast<std::size_t>(it - bars.begin())];
    }
  }
  if (bars.size() >= 2) {
    for (std::size_t k = 0; k < bars.size(); ++k) bars[k].second /= static_cast<double>(counts[k]);
    write_text(dir / "wallclock.svg", bar_chart_svg("Training time per run", "seconds", bars));
    out.files.push_back(dir / "wallclock.svg");
  }
  return out;
}

}  // namespace d2ace
