#pragma once

#include <cstdint>
#include <random>

namespace simhc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child seed for (stream, index) under a root seed. Every random quantity in
// a run is drawn from an Rng seeded this way, so one root seed reproduces the
// whole run regardless of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(root ^ mix64(stream)) + index);
}

namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kInitializer = 2;
inline constexpr std::uint64_t kRansac = 3;
}  // namespace streams

}  // namespace simhc
