#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2ace/baselines/selectors.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/dataio/dataset.hpp"
#include "d2ace/dataio/synthetic.hpp"
#include "d2ace/model/mlp.hpp"
#include "d2ace/sampling/sampling.hpp"

namespace d2ace {

struct DataConfig {
  std::string format = "synthetic";      // arff | csv | synthetic
  std::filesystem::path path;
  std::size_t label_count = 0;           // arff: trailing label attributes
  std::filesystem::path label_xml;       // arff: MULAN XML (overrides label_count)
  std::vector<std::string> label_columns; // csv
  std::string name;
  std::size_t synthetic_n = 400;
  std::size_t synthetic_d = 16;
  std::size_t synthetic_q = 6;
  std::uint64_t synthetic_seed = 0;
};

struct ModelConfig {
  std::size_t hidden = 256;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  double lr = 1e-4;
  std::size_t lr_warmup_epochs = 10;
  AdamConfig adam;
  bool importance_correction = false;
};

struct ProtocolConfig {
  std::size_t folds = 5;
  bool stratified = true;
  double validation_fraction = 0.2;
  bool standardize = true;
  double f1_threshold = 0.5;
  std::filesystem::path knn_cache_dir;  // empty: no cache
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  std::size_t fold = 0;
  DataConfig data;
  ModelConfig model;
  SamplingSchedule schedule;  // total_epochs is taken from model.epochs
  SelectorConfig selector;
  ProtocolConfig protocol;

  SamplingSchedule effective_schedule() const {
    auto s = schedule;
    s.total_epochs = model.epochs;
    return s;
  }

  void validate() const {
    if (model.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (model.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (model.hidden < 1) throw ConfigError("hidden must be >= 1");
    if (!(model.lr > 0.0)) throw ConfigError("lr must be positive");
    if (protocol.folds < 2) throw ConfigError("folds must be >= 2");
    if (fold >= protocol.folds) throw ConfigError("fold index out of range");
    if (!(protocol.validation_fraction > 0.0 && protocol.validation_fraction < 1.0))
      throw ConfigError("validation_fraction must be in (0,1)");
    if (!(protocol.f1_threshold > 0.0 && protocol.f1_threshold < 1.0))
      throw ConfigError("f1_threshold must be in (0,1)");
    if (data.format != "arff" && data.format != "csv" && data.format != "synthetic")
      throw ConfigError("dataset.format must be arff, csv or synthetic");
    if (data.format != "synthetic" && data.path.empty()) throw ConfigError("dataset.path is required");
    if (data.format == "arff" && data.label_count == 0 && data.label_xml.empty())
      throw ConfigError("arff datasets need dataset.labels (count or XML path)");
    if (data.format == "csv" && data.label_columns.empty())
      throw ConfigError("csv datasets need dataset.labels (column list)");
    selector.validate();
    effective_schedule().validate();
  }
};

/// Multi-selector comparison: every (selector, seed, fold) cell is one run.
struct CompareConfig {
  RunConfig base;
  std::vector<SelectorConfig> selectors;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::size_t> folds;  // empty: all
  std::size_t workers = 0;         // 0: hardware concurrency

  void validate() const {
    if (selectors.size() < 2) throw ConfigError("compare needs at least 2 selectors");
    if (seeds.empty()) throw ConfigError("compare needs at least one seed");
    auto b = base;
    for (std::size_t f : folds) {
      b.fold = f;
      b.validate();
    }
    for (const auto& s : selectors) s.validate();
    b.fold = 0;
    b.validate();
  }
};

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
void for_fields(const nlohmann::json& obj, const std::string& section, F&& on_field) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!on_field(it.key(), it.value())) throw ConfigError("unknown key '" + section + "." + it.key() + "'");
}

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("'" + key + "' must be a non-negative integer");
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("'" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline void from_json_section(const nlohmann::json& j, DataConfig& c) {
  detail::for_fields(j, "dataset", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "format") c.format = detail::get_as<std::string>(v, k);
    else if (k == "path") c.path = detail::get_as<std::string>(v, k);
    else if (k == "name") c.name = detail::get_as<std::string>(v, k);
    else if (k == "labels") {
      if (v.is_number_integer()) c.label_count = detail::get_as<std::size_t>(v, k);
      else if (v.is_string()) c.label_xml = v.get<std::string>();
      else if (v.is_array()) {
        c.label_columns.clear();
        for (const auto& e : v) c.label_columns.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      } else throw ConfigError("'dataset.labels' must be a count, an XML path or a column list");
    } else if (k == "n") c.synthetic_n = detail::get_as<std::size_t>(v, k);
    else if (k == "d") c.synthetic_d = detail::get_as<std::size_t>(v, k);
    else if (k == "q") c.synthetic_q = detail::get_as<std::size_t>(v, k);
    else if (k == "synthetic_seed") c.synthetic_seed = detail::get_as<std::uint64_t>(v, k);
    else return false;
    return true;
  });
}

inline void from_json_section(const nlohmann::json& j, ModelConfig& c) {
  detail::for_fields(j, "model", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "hidden") c.hidden = detail::get_as<std::size_t>(v, k);
    else if (k == "batch_size") c.batch_size = detail::get_as<std::size_t>(v, k);
    else if (k == "epochs") c.epochs = detail::get_as<std::size_t>(v, k);
    else if (k == "lr") c.lr = detail::get_as<double>(v, k);
    else if (k == "lr_warmup_epochs") c.lr_warmup_epochs = detail::get_as<std::size_t>(v, k);
    else if (k == "beta1") c.adam.beta1 = detail::get_as<double>(v, k);
    else if (k == "beta2") c.adam.beta2 = detail::get_as<double>(v, k);
    else if (k == "weight_decay") c.adam.weight_decay = detail::get_as<double>(v, k);
    else if (k == "eps") c.adam.eps = detail::get_as<double>(v, k);
    else if (k == "importance_correction") c.importance_correction = detail::get_as<bool>(v, k);
    else return false;
    return true;
  });
}

inline void from_json_section(const nlohmann::json& j, SamplingSchedule& c) {
  detail::for_fields(j, "schedule", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "s_init") c.s_init = detail::get_as<double>(v, k);
    else if (k == "warmup_epochs") c.warmup_epochs = detail::get_as<std::size_t>(v, k);
    else if (k == "p_start") c.p_start = detail::get_as<double>(v, k);
    else if (k == "p_end") c.p_end = detail::get_as<double>(v, k);
    else if (k == "t_start") c.t_start = detail::get_as<std::size_t>(v, k);
    else if (k == "t_end") c.t_end = detail::get_as<std::size_t>(v, k);
    else return false;
    return true;
  });
}

inline void from_json_section(const nlohmann::json& j, SelectorConfig& c) {
  if (j.is_string()) {
    c.kind = selector_kind_from_string(j.get<std::string>());
    return;
  }
  detail::for_fields(j, "selector", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "kind") c.kind = selector_kind_from_string(detail::get_as<std::string>(v, k));
    else if (k == "window") c.window = detail::get_as<std::size_t>(v, k);
    else if (k == "lambda1") c.lambda1 = detail::get_as<double>(v, k);
    else if (k == "lambda2") c.lambda2 = detail::get_as<double>(v, k);
    else if (k == "threshold") c.threshold = detail::get_as<double>(v, k);
    else if (k == "neighbors") c.neighbors = detail::get_as<std::size_t>(v, k);
    else if (k == "gamma") c.gamma = detail::get_as<double>(v, k);
    else if (k == "exp3_eta") c.exp3_eta = detail::get_as<double>(v, k);
    else if (k == "exp3_eps") c.exp3_eps = detail::get_as<double>(v, k);
    else if (k == "active_c") c.active_c = detail::get_as<double>(v, k);
    else if (k == "balance_candidates") c.balance_candidates = detail::get_as<std::size_t>(v, k);
    else if (k == "mask") c.mask = detail::get_as<bool>(v, k);
    else if (k == "sparse_path") c.sparse_path = detail::get_as<bool>(v, k);
    else if (k == "with_replacement") c.with_replacement = detail::get_as<bool>(v, k);
    else return false;
    return true;
  });
}

inline void from_json_section(const nlohmann::json& j, ProtocolConfig& c) {
  detail::for_fields(j, "protocol", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "folds") c.folds = detail::get_as<std::size_t>(v, k);
    else if (k == "stratified") c.stratified = detail::get_as<bool>(v, k);
    else if (k == "validation_fraction") c.validation_fraction = detail::get_as<double>(v, k);
    else if (k == "standardize") c.standardize = detail::get_as<bool>(v, k);
    else if (k == "f1_threshold") c.f1_threshold = detail::get_as<double>(v, k);
    else if (k == "knn_cache_dir") c.knn_cache_dir = detail::get_as<std::string>(v, k);
    else return false;
    return true;
  });
}

/// Keys shared by run and compare documents. Returns false for keys it does
/// not own.
inline bool run_field(RunConfig& c, const std::string& k, const nlohmann::json& v) {
  if (k == "seed") c.seed = detail::get_as<std::uint64_t>(v, k);
  else if (k == "run") c.run = detail::get_as<std::uint64_t>(v, k);
  else if (k == "fold") c.fold = detail::get_as<std::size_t>(v, k);
  else if (k == "dataset") from_json_section(v, c.data);
  else if (k == "model") from_json_section(v, c.model);
  else if (k == "schedule") from_json_section(v, c.schedule);
  else if (k == "selector") from_json_section(v, c.selector);
  else if (k == "protocol") from_json_section(v, c.protocol);
  else return false;
  return true;
}

/// With `check` false the result may be incomplete; callers that add
/// command-line overrides validate afterwards.
inline RunConfig run_config_from_json(const nlohmann::json& j, bool check = true) {
  RunConfig c;
  detail::for_fields(j, "config", [&](const std::string& k, const nlohmann::json& v) { return run_field(c, k, v); });
  if (check) c.validate();
  return c;
}

inline CompareConfig compare_config_from_json(const nlohmann::json& j, bool check = true) {
  CompareConfig c;
  detail::for_fields(j, "config", [&](const std::string& k, const nlohmann::json& v) {
    if (run_field(c.base, k, v)) return true;
    if (k == "selectors") {
      if (!v.is_array()) throw ConfigError("'selectors' must be a list");
      for (const auto& s : v) {
        SelectorConfig sc = c.base.selector;
        from_json_section(s, sc);
        c.selectors.push_back(sc);
      }
    } else if (k == "seeds") {
      c.seeds.clear();
      for (const auto& s : v) c.seeds.push_back(detail::get_as<std::uint64_t>(s, "seeds"));
    } else if (k == "folds") {
      for (const auto& f : v) c.folds.push_back(detail::get_as<std::size_t>(f, "folds"));
    } else if (k == "workers") c.workers = detail::get_as<std::size_t>(v, k);
    else return false;
    return true;
  });
  if (check) c.validate();
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json data = {{"format", c.data.format}, {"name", c.data.name}};
  if (c.data.format == "synthetic") {
    data["n"] = c.data.synthetic_n;
    data["d"] = c.data.synthetic_d;
    data["q"] = c.data.synthetic_q;
    data["synthetic_seed"] = c.data.synthetic_seed;
  } else {
    data["path"] = c.data.path.string();
    if (c.data.format == "csv") data["labels"] = c.data.label_columns;
    else if (!c.data.label_xml.empty()) data["labels"] = c.data.label_xml.string();
    else data["labels"] = c.data.label_count;
  }
  auto sel = to_json(c.selector);
  const auto& s = c.schedule;
  nlohmann::json j = {
      {"seed", c.seed},
      {"run", c.run},
      {"fold", c.fold},
      {"dataset", data},
      {"model",
       {{"hidden", c.model.hidden},
        {"batch_size", c.model.batch_size},
        {"epochs", c.model.epochs},
        {"lr", c.model.lr},
        {"lr_warmup_epochs", c.model.lr_warmup_epochs},
        {"beta1", c.model.adam.beta1},
        {"beta2", c.model.adam.beta2},
        {"weight_decay", c.model.adam.weight_decay},
        {"eps", c.model.adam.eps},
        {"importance_correction", c.model.importance_correction}}},
      {"schedule",
       {{"s_init", s.s_init},
        {"warmup_epochs", s.warmup_epochs},
        {"p_start", s.p_start},
        {"p_end", s.p_end},
        {"t_start", s.t_start},
        {"t_end", s.t_end}}},
      {"selector", sel},
      {"protocol",
       {{"folds", c.protocol.folds},
        {"stratified", c.protocol.stratified},
        {"validation_fraction", c.protocol.validation_fraction},
        {"standardize", c.protocol.standardize},
        {"f1_threshold", c.protocol.f1_threshold},
        {"knn_cache_dir", c.protocol.knn_cache_dir.string()}}}};
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

inline MultiLabelDataset load_dataset(const DataConfig& c) {
  MultiLabelDataset ds;
  if (c.format == "synthetic") ds = make_synthetic_dataset(c.synthetic_n, c.synthetic_d, c.synthetic_q, c.synthetic_seed);
  else if (c.format == "csv") ds = load_csv(c.path, c.label_columns);
  else if (!c.label_xml.empty()) ds = load_arff(c.path, LabelSpec{c.label_xml});
  else ds = load_arff(c.path, LabelSpec{c.label_count});
  if (!c.name.empty()) ds.name = c.name;
  ds.validate();
  return ds;
}

}  // namespace d2ace
