#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "d2ace/core/dense_matrix.hpp"
#include "d2ace/core/errors.hpp"

namespace d2ace {

/// n x k neighbor indices, row i listing the k nearest other rows of i.
struct NeighborTable {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const noexcept { return neighbors.size(); }
  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;
};

/// Per-column zero mean, unit variance (population). Constant columns are
/// centered only.
inline DenseMatrix standardize_columns(const DenseMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> sd(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean[j];
      sd[j] += c * c;
    }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));
  DenseMatrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out(i, j) = sd[j] > 1e-12 ? (x(i, j) - mean[j]) / sd[j] : x(i, j) - mean[j];
  return out;
}

/// Exhaustive Euclidean KNN. Row i never lists itself; distance ties go to
/// the lower index. O(n^2 d).
inline NeighborTable knn_bruteforce(const DenseMatrix& features, std::size_t k) {
  const std::size_t n = features.rows();
  if (k >= n)
    throw ConfigError("knn_bruteforce: k=" + std::to_string(k) + " must be < n=" + std::to_string(n));
  NeighborTable table;
  table.k = k;
  table.neighbors.resize(n);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    auto xi = features.row(i);
    for (std::size_t m = 0; m < n; ++m) {
      if (m == i) continue;
      auto xm = features.row(m);
      double s = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) {
        const double diff = xi[c] - xm[c];
        s += diff * diff;
      }
      dist.emplace_back(s, m);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    auto& row = table.neighbors[i];
    row.resize(k);
    for (std::size_t r = 0; r < k; ++r) row[r] = dist[r].second;
  }
  return table;
}

// KNN cache: a text table keyed by (dataset hash, k).
//
//   # d2ace-knn v1 hash=<16 hex digits> k=<k> n=<n>
//   instance_index,neighbor_1,...,neighbor_k
//   0,5,3
//   ...

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline void write_knn_cache(const std::filesystem::path& path, const NeighborTable& table,
                            std::uint64_t dataset_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write KNN cache " + path.string());
  out << "# d2ace-knn v1 hash=" << hash_hex(dataset_hash) << " k=" << table.k
      << " n=" << table.size() << "\n";
  out << "instance_index";
  for (std::size_t r = 1; r <= table.k; ++r) out << ",neighbor_" << r;
  out << "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i;
    for (std::size_t m : table.neighbors[i]) out << "," << m;
    out << "\n";
  }
}

/// Returns the cached table only if its header matches (hash, k).
inline std::optional<NeighborTable> read_knn_cache(const std::filesystem::path& path,
                                                   std::uint64_t dataset_hash, std::size_t k) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string header;
  std::getline(in, header);
  const std::string expect = "# d2ace-knn v1 hash=" + hash_hex(dataset_hash) + " k=" + std::to_string(k) + " ";
  if (header.rfind(expect, 0) != 0) return std::nullopt;
  std::string line;
  std::getline(in, line);  // column header
  NeighborTable table;
  table.k = k;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::size_t> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stoull(cell));
    if (vals.size() != k + 1 || vals[0] != table.neighbors.size())
      throw ParseError("malformed KNN cache row", lineno);
    table.neighbors.emplace_back(vals.begin() + 1, vals.end());
  }
  return table;
}

}  // namespace d2ace
