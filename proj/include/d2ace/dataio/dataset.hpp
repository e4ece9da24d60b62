#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"
#include "d2ace/core/sparse_binary_matrix.hpp"

namespace d2ace {

struct MultiLabelDataset {
  std::string name;
  DenseMatrix features;         // n x d
  SparseBinaryMatrix labels;    // n x q
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t d() const noexcept { return features.cols(); }
  std::size_t q() const noexcept { return labels.cols(); }

  /// Mean number of relevant labels per instance.
  double cardinality() const {
    return n() ? static_cast<double>(labels.nnz()) / static_cast<double>(n()) : 0.0;
  }
  double density() const { return q() ? cardinality() / static_cast<double>(q()) : 0.0; }

  MultiLabelDataset subset(std::span<const std::size_t> idx) const {
    return {name, features.select_rows(idx), labels.select_rows(idx), feature_names, label_names};
  }

  /// Throws DataError unless n >= 1, q >= 2 and every feature is finite.
  void validate() const {
    if (n() < 1) throw DataError(name + ": dataset has no instances");
    if (q() < 2) throw DataError(name + ": need at least 2 labels, got " + std::to_string(q()));
    if (labels.rows() != n()) throw ShapeError(name + ": label rows != feature rows");
    if (!features.all_finite()) throw DataError(name + ": non-finite feature value");
  }
};

/// FNV-1a over shape, feature bit patterns and label rows.
inline std::uint64_t content_hash(const MultiLabelDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= b[k];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[3] = {ds.n(), ds.d(), ds.q()};
  mix(shape, sizeof shape);
  for (double v : ds.features.data()) mix(&v, sizeof v);
  for (std::size_t i = 0; i < ds.labels.rows(); ++i) {
    const std::uint64_t len = ds.labels.row(i).size();
    mix(&len, sizeof len);
    for (std::uint64_t j : ds.labels.row(i)) mix(&j, sizeof j);
  }
  return h;
}

inline nlohmann::json dataset_manifest(const MultiLabelDataset& ds) {
  std::ostringstream hs;
  hs << std::hex;
  hs.width(16);
  hs.fill('0');
  hs << content_hash(ds);
  return {{"name", ds.name},         {"n", ds.n()},
          {"d", ds.d()},             {"q", ds.q()},
          {"cardinality", ds.cardinality()}, {"density", ds.density()},
          {"hash", hs.str()}};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return std::string(s);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Splits on commas outside quotes.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) quote = 0;
      else cur.push_back(c);
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ',') {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

struct ArffAttribute {
  std::string name;
  bool numeric = true;
  std::vector<std::string> nominal_values;
};

inline ArffAttribute parse_attribute(std::string_view rest, std::size_t lineno) {
  rest = trim(rest);
  ArffAttribute attr;
  std::size_t pos = 0;
  if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
    const char q = rest.front();
    const auto end = rest.find(q, 1);
    if (end == std::string_view::npos) throw ParseError("unterminated attribute name", lineno);
    attr.name = std::string(rest.substr(1, end - 1));
    pos = end + 1;
  } else {
    while (pos < rest.size() && !std::isspace(static_cast<unsigned char>(rest[pos])) && rest[pos] != '{')
      ++pos;
    attr.name = std::string(rest.substr(0, pos));
  }
  auto type = trim(rest.substr(pos));
  if (type.empty()) throw ParseError("attribute '" + attr.name + "' has no type", lineno);
  if (type.front() == '{') {
    const auto close = type.find('}');
    if (close == std::string_view::npos) throw ParseError("unterminated nominal value list", lineno);
    attr.numeric = false;
    for (auto& v : split_csv(type.substr(1, close - 1))) attr.nominal_values.push_back(unquote(v));
    return attr;
  }
  const auto t = lower(type);
  if (t == "numeric" || t == "real" || t == "integer") return attr;
  throw ParseError("unsupported attribute type '" + std::string(type) + "'", lineno);
}

inline std::vector<std::string> read_mulan_label_xml(const std::filesystem::path& xml) {
  std::ifstream in(xml);
  if (!in) throw ParseError("cannot open label file " + xml.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  static const std::regex label_re(R"(<label\s+name\s*=\s*["']([^"']*)["'])");
  std::vector<std::string> names;
  for (std::sregex_iterator it(text.begin(), text.end(), label_re), end; it != end; ++it)
    names.push_back((*it)[1].str());
  if (names.empty()) throw ParseError("no <label name=...> entries in " + xml.string());
  return names;
}

}  // namespace detail

/// Labels are either the trailing `count` attributes or those named in a
/// MULAN XML label file.
using LabelSpec = std::variant<std::size_t, std::filesystem::path>;

/// Parses a MULAN-style ARFF file (dense or sparse `{idx val}` rows).
inline MultiLabelDataset load_arff(const std::filesystem::path& path, const LabelSpec& label_spec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  MultiLabelDataset ds;
  ds.name = path.stem().string();
  std::vector<detail::ArffAttribute> attrs;
  std::string line;
  std::size_t lineno = 0;
  bool in_data = false;

  std::vector<bool> is_label;
  std::vector<std::size_t> slot;  // attribute -> feature column or label column
  std::vector<double> feat;
  std::vector<SparseBinaryMatrix::Row> label_rows;
  std::size_t d = 0;

  auto setup_columns = [&]() {
    is_label.assign(attrs.size(), false);
    if (std::holds_alternative<std::size_t>(label_spec)) {
      const auto count = std::get<std::size_t>(label_spec);
      if (count > attrs.size()) throw ConfigError("label count exceeds attribute count");
      for (std::size_t a = attrs.size() - count; a < attrs.size(); ++a) is_label[a] = true;
    } else {
      const auto names = detail::read_mulan_label_xml(std::get<std::filesystem::path>(label_spec));
      std::unordered_map<std::string, std::size_t> by_name;
      for (std::size_t a = 0; a < attrs.size(); ++a) by_name[attrs[a].name] = a;
      for (const auto& nm : names) {
        auto it = by_name.find(nm);
        if (it == by_name.end()) throw ParseError("label '" + nm + "' not declared in " + path.string());
        is_label[it->second] = true;
      }
    }
    slot.resize(attrs.size());
    std::size_t f = 0, l = 0;
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      if (is_label[a]) {
        slot[a] = l++;
        ds.label_names.push_back(attrs[a].name);
      } else {
        slot[a] = f++;
        ds.feature_names.push_back(attrs[a].name);
      }
    }
    d = f;
  };

  auto value_of = [&](std::size_t a, std::string_view raw, std::size_t ln) -> double {
    const auto v = detail::unquote(raw);
    if (v == "?") throw DataError("missing value for '" + attrs[a].name + "' (line " + std::to_string(ln) + ")");
    if (is_label[a]) {
      if (v == "0") return 0.0;
      if (v == "1") return 1.0;
      throw DataError("non-binary label value '" + v + "' for '" + attrs[a].name + "' (line " +
                      std::to_string(ln) + ")");
    }
    if (attrs[a].numeric) {
      double x;
      if (!detail::parse_double(v, x)) throw ParseError("bad numeric value '" + v + "'", ln);
      return x;
    }
    const auto& nv = attrs[a].nominal_values;
    auto it = std::find(nv.begin(), nv.end(), v);
    if (it == nv.end()) throw ParseError("value '" + v + "' not in nominal list of '" + attrs[a].name + "'", ln);
    return static_cast<double>(it - nv.begin());
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto s = detail::trim(line);
    if (s.empty() || s.front() == '%') continue;
    if (!in_data) {
      if (s.front() != '@') throw ParseError("expected @-directive in header", lineno);
      const auto sp = s.find_first_of(" \t");
      const auto kw = detail::lower(s.substr(0, sp));
      if (kw == "@relation") {
        if (sp != std::string_view::npos) {
          auto rel = detail::unquote(s.substr(sp));
          // MEKA/MULAN relations often carry options after ':'
          ds.name = rel.substr(0, rel.find(':'));
        }
      } else if (kw == "@attribute") {
        if (sp == std::string_view::npos) throw ParseError("@attribute without name", lineno);
        attrs.push_back(detail::parse_attribute(s.substr(sp), lineno));
      } else if (kw == "@data") {
        if (attrs.empty()) throw ParseError("@data before any @attribute", lineno);
        setup_columns();
        in_data = true;
      } else {
        throw ParseError("unknown header directive '" + std::string(s.substr(0, sp)) + "'", lineno);
      }
      continue;
    }

    std::vector<double> row(d, 0.0);
    SparseBinaryMatrix::Row lab;
    auto put = [&](std::size_t a, double v) {
      if (is_label[a]) {
        if (v != 0.0) lab.push_back(slot[a]);
      } else {
        row[slot[a]] = v;
      }
    };
    if (s.front() == '{') {
      const auto close = s.find('}');
      if (close == std::string_view::npos) throw ParseError("unterminated sparse row", lineno);
      auto body = detail::trim(s.substr(1, close - 1));
      if (!body.empty()) {
        for (auto& cell : detail::split_csv(body)) {
          const auto sp = cell.find(' ');
          if (sp == std::string::npos) throw ParseError("sparse entry needs 'index value'", lineno);
          std::size_t a = 0;
          auto idx = detail::trim(std::string_view(cell).substr(0, sp));
          auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), a);
          if (ec != std::errc{} || a >= attrs.size()) throw ParseError("bad sparse index", lineno);
          put(a, value_of(a, std::string_view(cell).substr(sp + 1), lineno));
        }
      }
    } else {
      auto cells = detail::split_csv(s);
      if (cells.size() != attrs.size())
        throw ParseError("expected " + std::to_string(attrs.size()) + " values, got " +
                             std::to_string(cells.size()),
                         lineno);
      for (std::size_t a = 0; a < cells.size(); ++a) put(a, value_of(a, cells[a], lineno));
    }
    feat.insert(feat.end(), row.begin(), row.end());
    label_rows.push_back(std::move(lab));
  }
  if (!in_data) throw ParseError("no @data section in " + path.string(), lineno);

  const std::size_t n = label_rows.size();
  ds.features = DenseMatrix(n, d, std::move(feat));
  ds.labels = SparseBinaryMatrix(ds.label_names.size(), std::move(label_rows));
  ds.validate();
  return ds;
}

/// Columns named (or 0-based indexed, when numeric) in `label_columns` are
/// labels; every other column is a numeric feature.
inline MultiLabelDataset load_csv(const std::filesystem::path& path,
                                  const std::vector<std::string>& label_columns) {
  if (label_columns.empty()) throw ConfigError("load_csv: no label columns given");
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV file", 1);
  const auto header = detail::split_csv(line);

  std::vector<bool> is_label(header.size(), false);
  for (const auto& lc : label_columns) {
    auto it = std::find(header.begin(), header.end(), lc);
    std::size_t col;
    if (it != header.end()) {
      col = static_cast<std::size_t>(it - header.begin());
    } else {
      auto [p, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), col);
      if (ec != std::errc{} || p != lc.data() + lc.size() || col >= header.size())
        throw ConfigError("load_csv: unknown label column '" + lc + "'");
    }
    is_label[col] = true;
  }

  MultiLabelDataset ds;
  ds.name = path.stem().string();
  std::vector<std::size_t> slot(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (is_label[c]) {
      slot[c] = ds.label_names.size();
      ds.label_names.push_back(header[c]);
    } else {
      slot[c] = ds.feature_names.size();
      ds.feature_names.push_back(header[c]);
    }
  }
  const std::size_t d = ds.feature_names.size();
  std::vector<double> feat;
  std::vector<SparseBinaryMatrix::Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw ParseError("ragged row: expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    std::vector<double> row(d);
    SparseBinaryMatrix::Row lab;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v;
      if (!detail::parse_double(cells[c], v))
        throw ParseError("non-numeric cell '" + cells[c] + "'", lineno);
      if (is_label[c]) {
        if (v == 1.0) lab.push_back(slot[c]);
        else if (v != 0.0)
          throw DataError("label column '" + header[c] + "' holds " + cells[c] + " (line " +
                          std::to_string(lineno) + ")");
      } else {
        row[slot[c]] = v;
      }
    }
    feat.insert(feat.end(), row.begin(), row.end());
    rows.push_back(std::move(lab));
  }
  const std::size_t n = rows.size();
  ds.features = DenseMatrix(n, d, std::move(feat));
  ds.labels = SparseBinaryMatrix(ds.label_names.size(), std::move(rows));
  ds.validate();
  return ds;
}

/// Writes features then labels, doubles at full round-trip precision.
inline void save_csv(const std::filesystem::path& path, const MultiLabelDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < ds.d(); ++c) out << (c ? "," : "") << ds.feature_names[c];
  for (std::size_t j = 0; j < ds.q(); ++j) out << "," << ds.label_names[j];
  out << "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t c = 0; c < ds.d(); ++c) out << (c ? "," : "") << ds.features(i, c);
    for (std::size_t j = 0; j < ds.q(); ++j) out << "," << (ds.labels.get(i, j) ? 1 : 0);
    out << "\n";
  }
}

/// Dense ARFF with the labels as trailing {0,1} attributes.
inline void save_arff(const std::filesystem::path& path, const MultiLabelDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "@relation '" << ds.name << "'\n\n";
  for (const auto& f : ds.feature_names) out << "@attribute '" << f << "' numeric\n";
  for (const auto& l : ds.label_names) out << "@attribute '" << l << "' {0,1}\n";
  out << "\n@data\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t c = 0; c < ds.d(); ++c) out << (c ? "," : "") << ds.features(i, c);
    for (std::size_t j = 0; j < ds.q(); ++j) out << "," << (ds.labels.get(i, j) ? 1 : 0);
    out << "\n";
  }
}

}  // namespace d2ace
