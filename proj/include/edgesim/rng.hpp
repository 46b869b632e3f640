#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace edgesim {

/// SplitMix64 finalizer. Used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags. Each (tag, index) pair names one substream of a master seed.
enum class StreamTag : std::uint64_t {
  DeviceChannel = 1,
  DeviceSetup = 2,
  ExternalSetup = 3,
  Policy = 4,
  Sweep = 5,
  Solver = 6,
  Check = 7,
};

/// Counter-based split: the seed for substream (tag, index) depends only on
/// the master seed and that pair, so adding devices leaves existing
/// substreams untouched.
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t s = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(tag)));
  return splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Seeded random stream. Distributions are implemented here rather than via
/// <random> distribution objects so draws are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Exponential with the given mean (inverse-CDF method).
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = -n % n;
    for (;;) {
      std::uint64_t x = engine_();
      if (x >= limit) return x % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace edgesim
