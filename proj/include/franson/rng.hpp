#pragma once

#include <cstdint>
#include <random>

namespace franson {

using Engine = std::mt19937_64;

/// Simulation stages that draw random numbers. Each stage gets its own stream.
enum class Stage : std::uint64_t {
  Emission = 1,
  Routing = 2,
  Darks = 3,
  Detection = 4,
  Scan = 5,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sub-seed for (stage, channel, chunk) under a master seed. Each field is folded
/// in through its own SplitMix64 round so that neighbouring indices decorrelate.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stage stage,
                                    std::uint64_t channel = 0, std::uint64_t chunk = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ static_cast<std::uint64_t>(stage));
  s = mix64(s ^ (channel << 32));
  return mix64(s ^ chunk);
}

} // namespace franson
