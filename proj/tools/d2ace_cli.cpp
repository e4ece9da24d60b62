// d2ace command-line front end: run, compare, verify, kfold-cache,
// knn-cache, replay, charts.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "d2ace/d2ace.hpp"

namespace fs = std::filesystem;
using namespace d2ace;

namespace {

struct DataFlags {
  std::string dataset;
  std::string format;
  std::string labels;
  std::vector<std::string> label_cols;
  std::vector<std::size_t> synthetic;  // n d q

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "Dataset path (ARFF or CSV)");
    app->add_option("--format", format, "arff | csv | synthetic (default: from extension)");
    app->add_option("--labels", labels, "ARFF: trailing label count or MULAN XML file");
    app->add_option("--label-cols", label_cols, "CSV: label column names or indices")->delimiter(',');
    app->add_option("--synthetic", synthetic, "Synthetic dataset n,d,q")->delimiter(',')->expected(3);
  }

  void apply(DataConfig& d) const {
    if (!synthetic.empty()) {
      d.format = "synthetic";
      d.synthetic_n = synthetic[0];
      d.synthetic_d = synthetic[1];
      d.synthetic_q = synthetic[2];
    }
    if (!dataset.empty()) {
      d.path = dataset;
      const auto ext = fs::path(dataset).extension().string();
      d.format = format.empty() ? (ext == ".csv" ? "csv" : "arff") : format;
    } else if (!format.empty()) {
      d.format = format;
    }
    if (!labels.empty()) {
      if (labels.find_first_not_of("0123456789") == std::string::npos) {
        d.label_count = std::stoul(labels);
        d.label_xml.clear();
      } else {
        d.label_xml = labels;
      }
    }
    if (!label_cols.empty()) d.label_columns = label_cols;
  }
};

struct RunFlags {
  std::string config;
  std::string selector;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, fold, folds, batch, hidden;
  bool importance = false;

  void add(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON configuration file");
    app->add_option("--selector", selector, "Selector kind (Random, Active, Recent, DIHCL, Balance, Hard-Imb, ML-Unc, D2ACE)");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--fold", fold, "Test fold index");
    app->add_option("--folds", folds, "Number of folds");
    app->add_option("--batch-size", batch, "Mini-batch size");
    app->add_option("--hidden", hidden, "Hidden layer width");
    app->add_flag("--importance-correction", importance, "Scale losses by 1/(nP) for drawn batches");
  }

  nlohmann::json base_json() const { return config.empty() ? nlohmann::json::object() : read_json_file(config); }

  void apply(RunConfig& c) const {
    if (!selector.empty()) c.selector.kind = selector_kind_from_string(selector);
    if (seed) c.seed = *seed;
    if (epochs) c.model.epochs = *epochs;
    if (fold) c.fold = *fold;
    if (folds) c.protocol.folds = *folds;
    if (batch) c.model.batch_size = *batch;
    if (hidden) c.model.hidden = *hidden;
    if (importance) c.model.importance_correction = true;
  }
};

void print_metrics(const char* tag, const MetricRow& m) {
  std::cout << tag << " macro_auc=" << m.macro_auc << " macro_f1=" << m.macro_f1
            << " ranking_loss=" << m.ranking_loss << " map=" << m.map << "\n";
}

int cmd_run(const DataFlags& df, const RunFlags& rf, const std::string& out, bool charts) {
  // command-line flags override the document
  RunConfig cfg;
  const auto j = rf.base_json();
  if (!j.empty()) cfg = run_config_from_json(j, false);
  df.apply(cfg.data);
  rf.apply(cfg);
  cfg.validate();
  const auto m = run(cfg);
  const std::string stem = "run_" + std::string(to_string(cfg.selector.kind)) + "_seed" + std::to_string(cfg.seed) +
                           "_fold" + std::to_string(cfg.fold);
  save_run(m, out, stem);
  if (charts) {
    const auto co = emit_charts({m}, fs::path(out) / "charts");
    for (const auto& w : co.warnings) std::cerr << "warning: " << w << "\n";
  }
  std::cout << "status=" << m.status << " epochs=" << m.epochs.size() << " best_epoch=" << m.best_epoch << "\n";
  print_metrics("test@best", m.best_test);
  std::cout << "manifest: " << (fs::path(out) / (stem + ".json")).string() << "\n";
  return m.status == "ok" ? 0 : 1;
}

int cmd_compare(const DataFlags& df, const RunFlags& rf, const std::vector<std::string>& selectors,
                const std::vector<std::uint64_t>& seeds, std::size_t workers, const std::string& out) {
  const auto j = rf.base_json();
  CompareConfig cfg;
  if (!j.empty()) {
    auto doc = j;
    // allow compare flags to fill in what the document leaves out
    if (!doc.contains("selectors") && !selectors.empty()) doc["selectors"] = selectors;
    if (!doc.contains("selectors")) doc["selectors"] = {"Random", "D2ACE"};
    cfg = compare_config_from_json(doc, false);
  } else {
    for (const auto& s : selectors.empty() ? std::vector<std::string>{"Random", "D2ACE"} : selectors) {
      SelectorConfig sc;
      sc.kind = selector_kind_from_string(s);
      cfg.selectors.push_back(sc);
    }
  }
  if (!selectors.empty() && !j.empty() && j.contains("selectors")) {
    cfg.selectors.clear();
    for (const auto& s : selectors) {
      SelectorConfig sc = cfg.base.selector;
      sc.kind = selector_kind_from_string(s);
      cfg.selectors.push_back(sc);
    }
  }
  df.apply(cfg.base.data);
  rf.apply(cfg.base);
  if (!seeds.empty()) cfg.seeds = seeds;
  if (workers) cfg.workers = workers;
  if (rf.fold) cfg.folds = {*rf.fold};
  cfg.validate();

  const auto res = compare(cfg);
  std::vector<RunManifest> ok;
  int failures = 0;
  for (const auto& c : res.cells) {
    const auto stem = cell_stem(c, cfg.selectors);
    if (c.ok) {
      save_run(c.manifest, out, stem);
      ok.push_back(c.manifest);
    } else {
      ++failures;
      std::cerr << "cell " << stem << " failed: " << c.error << "\n";
      if (!c.manifest.epochs.empty()) save_run(c.manifest, out, stem);
    }
  }
  write_text(fs::path(out) / "summary.csv", summary_csv(res.summary));
  if (!ok.empty()) {
    const auto co = emit_charts(ok, fs::path(out) / "charts");
    for (const auto& w : co.warnings) std::cerr << "warning: " << w << "\n";
  }
  std::cout << summary_csv(res.summary);
  return failures == 0 ? 0 : 1;
}

int cmd_verify(std::uint64_t seed, std::size_t draws, std::size_t fuzz, bool quick, const std::string& out) {
  VerifyConfig cfg;
  cfg.seed = seed;
  cfg.fuzz_count = fuzz;
  cfg.unbiasedness.draws = draws;
  if (quick) {
    cfg.unbiasedness.draws = std::min<std::size_t>(draws, 50000);
    cfg.second_moment.draws = 10000;
    cfg.scaling.min_seconds = 0.005;
  }
  const auto suite = run_verify_suite(cfg);
  const auto j = suite.to_json();
  if (!out.empty()) write_text(out, j.dump(2) + "\n");
  for (const auto& r : suite.reports)
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.lemma_id << " max_violation=" << r.max_violation
              << " tolerance=" << r.tolerance << (r.has_control ? (r.control_detected ? " control=detected" : " control=MISSED") : "")
              << " runtime_s=" << r.runtime_s << "\n";
  return suite.all_passed() ? 0 : 1;
}

int cmd_kfold(const DataFlags& df, std::size_t folds, std::uint64_t seed, bool random, const std::string& out) {
  RunConfig cfg;
  df.apply(cfg.data);
  cfg.protocol.folds = folds;
  cfg.protocol.stratified = !random;
  cfg.seed = seed;
  cfg.validate();
  const auto ds = load_dataset(cfg.data);
  const auto fa = make_folds(ds, cfg);
  std::ostringstream os;
  os << "# d2ace-folds v1 hash=" << hash_hex(content_hash(ds)) << " folds=" << folds << " seed=" << seed
     << " method=" << (random ? "random" : "stratified") << "\n";
  os << "instance_index,fold\n";
  for (std::size_t i = 0; i < fa.fold_of.size(); ++i) os << i << "," << fa.fold_of[i] << "\n";
  write_text(out, os.str());
  const auto spread = fa.label_spread(ds.labels);
  std::cout << "wrote " << out << "; max per-label spread "
            << (spread.empty() ? 0 : *std::max_element(spread.begin(), spread.end())) << "\n";
  return 0;
}

int cmd_knn(const DataFlags& df, std::size_t k, bool standardize, const std::string& out) {
  RunConfig cfg;
  df.apply(cfg.data);
  cfg.validate();
  const auto ds = load_dataset(cfg.data);
  const auto x = standardize ? standardize_columns(ds.features) : ds.features;
  const auto table = knn_bruteforce(x, k);
  write_knn_cache(out, table, content_hash(ds));
  std::cout << "wrote " << out << " (n=" << table.size() << ", k=" << k << ")\n";
  return 0;
}

int cmd_replay(const std::string& manifest, const std::string& csv) {
  const auto r = replay_manifest(manifest, csv);
  std::cout << (r.identical ? "identical" : "DIFFERENT") << "\n";
  return r.identical ? 0 : 1;
}

int cmd_charts(const std::vector<std::string>& manifests, const std::string& out) {
  std::vector<RunManifest> ms;
  for (const auto& p : manifests) ms.push_back(manifest_from_json(read_json_file(p)));
  const auto co = emit_charts(ms, out);
  for (const auto& w : co.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : co.files) std::cout << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label batch selection engine and training harness"};
  app.require_subcommand(1);

  DataFlags run_data, cmp_data, kf_data, knn_data;
  RunFlags run_flags, cmp_flags;
  std::string run_out = "out", cmp_out = "out", verify_out, kf_out = "folds.csv", knn_out = "knn.csv";
  bool run_charts = false;

  auto* run_cmd = app.add_subcommand("run", "Train one selector on one fold");
  run_data.add(run_cmd);
  run_flags.add(run_cmd);
  run_cmd->add_option("-o,--out", run_out, "Output directory");
  run_cmd->add_flag("--charts", run_charts, "Also write SVG charts");

  std::vector<std::string> cmp_selectors;
  std::vector<std::uint64_t> cmp_seeds;
  std::size_t cmp_workers = 0;
  auto* cmp_cmd = app.add_subcommand("compare", "Run several selectors over folds and seeds");
  cmp_data.add(cmp_cmd);
  cmp_flags.add(cmp_cmd);
  cmp_cmd->add_option("--selectors", cmp_selectors, "Selector kinds")->delimiter(',');
  cmp_cmd->add_option("--seeds", cmp_seeds, "Seeds")->delimiter(',');
  cmp_cmd->add_option("--workers", cmp_workers, "Worker threads (0 = all cores)");
  cmp_cmd->add_option("-o,--out", cmp_out, "Output directory");

  std::uint64_t v_seed = 0;
  std::size_t v_draws = 200000, v_fuzz = 1000;
  bool v_quick = false;
  auto* ver_cmd = app.add_subcommand("verify", "Run the lemma verification suite");
  ver_cmd->add_option("--seed", v_seed, "Seed");
  ver_cmd->add_option("--draws", v_draws, "Monte Carlo batch draws for unbiasedness");
  ver_cmd->add_option("--fuzz", v_fuzz, "Positivity fuzz trials");
  ver_cmd->add_flag("--quick", v_quick, "Smaller Monte Carlo budgets");
  ver_cmd->add_option("-o,--out", verify_out, "JSON report path");

  std::size_t kf_folds = 5;
  std::uint64_t kf_seed = 0;
  bool kf_random = false;
  auto* kf_cmd = app.add_subcommand("kfold-cache", "Write a fold assignment file");
  kf_data.add(kf_cmd);
  kf_cmd->add_option("--folds", kf_folds, "Number of folds");
  kf_cmd->add_option("--seed", kf_seed, "Seed");
  kf_cmd->add_flag("--random", kf_random, "Plain random folds instead of stratified");
  kf_cmd->add_option("-o,--out", kf_out, "Output file");

  std::size_t knn_k = 5;
  bool knn_raw = false;
  auto* knn_cmd = app.add_subcommand("knn-cache", "Precompute the K-nearest-neighbor table");
  knn_data.add(knn_cmd);
  knn_cmd->add_option("-k,--k", knn_k, "Neighbors per instance");
  knn_cmd->add_flag("--raw", knn_raw, "Skip per-feature standardization");
  knn_cmd->add_option("-o,--out", knn_out, "Output file");

  std::string rp_manifest, rp_csv;
  auto* rp_cmd = app.add_subcommand("replay", "Re-run a manifest and compare its metrics CSV");
  rp_cmd->add_option("manifest", rp_manifest, "Manifest JSON")->required();
  rp_cmd->add_option("--csv", rp_csv, "Metrics CSV to compare against");

  std::vector<std::string> ch_manifests;
  std::string ch_out = "charts";
  auto* ch_cmd = app.add_subcommand("charts", "Render SVG charts from manifests");
  ch_cmd->add_option("manifests", ch_manifests, "Manifest JSON files")->required();
  ch_cmd->add_option("-o,--out", ch_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_data, run_flags, run_out, run_charts);
    if (*cmp_cmd) return cmd_compare(cmp_data, cmp_flags, cmp_selectors, cmp_seeds, cmp_workers, cmp_out);
    if (*ver_cmd) return cmd_verify(v_seed, v_draws, v_fuzz, v_quick, verify_out);
    if (*kf_cmd) return cmd_kfold(kf_data, kf_folds, kf_seed, kf_random, kf_out);
    if (*knn_cmd) return cmd_knn(knn_data, knn_k, !knn_raw, knn_out);
    if (*rp_cmd) return cmd_replay(rp_manifest, rp_csv);
    if (*ch_cmd) return cmd_charts(ch_manifests, ch_out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
