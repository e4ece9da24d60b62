#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace d2ace {

/// Identifies one independent random stream inside an experiment.
struct StreamId {
  std::uint64_t run = 0;
  std::uint64_t fold = 0;
  std::uint64_t epoch = 0;
  std::uint64_t purpose = 0;
};

/// Stable purpose tags. Values are part of the reproducibility contract.
namespace purpose {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kFolds = 2;
inline constexpr std::uint64_t kValidationSplit = 3;
inline constexpr std::uint64_t kBatches = 4;
inline constexpr std::uint64_t kFuzz = 5;
inline constexpr std::uint64_t kMonteCarlo = 6;
inline constexpr std::uint64_t kSynthetic = 7;
}  // namespace purpose

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_stream(std::uint64_t seed, const StreamId& id) noexcept {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t part : {id.run, id.fold, id.epoch, id.purpose}) {
    s = h ^ (part + 0x632be59bd9b4e019ULL);
    h = splitmix64(s);
  }
  return h;
}

}  // namespace detail

/// Seedable random source. std::mt19937_64 has a fully specified output
/// sequence; the distributions below are hand-rolled because the standard
/// distribution objects are implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, StreamId id = {})
      : seed_(seed), id_(id), engine_(detail::mix_stream(seed, id)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  const StreamId& id() const noexcept { return id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection sampled so it is unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(std::span<std::size_t>(p));
    return p;
  }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace d2ace
