#pragma once

#include <cstdint>
#include <random>

namespace occusim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates nearby seeds before they reach the engine.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for one unit of work (a day, a run, ...).
inline Rng derive_stream(std::uint64_t base_seed, std::uint64_t index) {
  return Rng(splitmix64(base_seed ^ index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double bernoulli_draw(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace occusim
