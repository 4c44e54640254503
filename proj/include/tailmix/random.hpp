#pragma once

#include <cstdint>
#include <random>

namespace tailmix {

/// SplitMix64 finalizer. Used to derive independent child seeds from a
/// master seed and a counter.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed number `index` of `master`. Distinct indices give
/// statistically independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Stream of uniforms strictly inside (0, 1), suitable for inverse-CDF
/// sampling (never returns 0 or 1).
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double next() noexcept {
    // 53 random bits, centred in their cell: (k + 0.5) / 2^53.
    const auto k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
  }

  double operator()() noexcept { return next(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tailmix
