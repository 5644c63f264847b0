#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ehcoop {

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. Uniform and exponential draws are computed
// from raw 64-bit engine output so results do not depend on the standard
// library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Stream for realization `index` under `master_seed`. Depends only on the
  // pair, never on which worker draws it.
  static RandomStream child(std::uint64_t master_seed, std::uint64_t index) {
    return RandomStream(mix_seed(mix_seed(master_seed) ^ mix_seed(index + 1)));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean, by inversion.
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ehcoop
