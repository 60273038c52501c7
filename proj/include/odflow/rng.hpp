#ifndef ODFLOW_RNG_HPP
#define ODFLOW_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace odflow {

/// Seedable generator with a fixed, build-independent output stream.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the
/// standard. The standard distribution classes are not (their algorithms are
/// implementation-defined), so every variate is derived here from raw engine
/// words. `kId` names the whole recipe and is written into run metadata.
class Rng {
 public:
  static constexpr std::string_view kId = "mt19937_64/u53-invcdf";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Exponential with the given rate, by inverse CDF.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Index drawn with probability proportional to `weights` (nonnegative,
  /// positive sum) by a linear inverse-CDF scan.
  std::size_t categorical(std::span<const double> weights, double total) {
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (u < acc) return i;
    }
    return last_positive;  // u landed in the rounding slack above acc
  }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF sampler over a fixed distribution using a cumulative table and
/// binary search.
class CumulativeSampler {
 public:
  explicit CumulativeSampler(std::span<const double> weights) : cumulative_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += std::max(weights[i], 0.0);
      cumulative_[i] = acc;
    }
  }

  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * total();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
      --it;
      while (it != cumulative_.begin() && *it == *(it - 1)) --it;
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace odflow

#endif  // ODFLOW_RNG_HPP
