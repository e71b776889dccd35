#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace clinfonce {

/// Mixes a base seed with a stream tag so independent consumers (batches,
/// per-epoch refreshes, model init) get decorrelated substreams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag);

/// Deterministic random source. Distributions are hand-evaluated from raw
/// 64-bit draws so the emitted stream does not depend on the standard
/// library's <random> distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n >= 1.
  std::int64_t uniform_int(std::int64_t n) {
    return static_cast<std::int64_t>(gen_() % static_cast<std::uint64_t>(n));
  }

  /// Standard normal via Box-Muller; consumes exactly two raw draws.
  double gaussian() {
    double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Index draw proportional to non-negative weights; one uniform consumed.
  std::size_t categorical(const std::vector<double>& weights);

  /// In-place Fisher-Yates shuffle of 0..n-1 index vector.
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 gen_;
};

}  // namespace clinfonce
