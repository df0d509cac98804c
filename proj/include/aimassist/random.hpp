#pragma once

#include <cstdint>
#include <random>

namespace aimassist {

/// Stream splitting: every random consumer derives its seed from the master
/// seed through a chain of `split_seed(parent, stream)` calls. The mix is the
/// SplitMix64 finalizer applied to parent ^ golden-ratio-scaled stream index,
/// so sibling streams are decorrelated and the mapping is stable across
/// platforms.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t stream) {
  std::uint64_t z = parent ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named stream indices used inside one trial.
namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kTraining = 3;
inline constexpr std::uint64_t kCalibration = 4;
inline constexpr std::uint64_t kModel = 5;
inline constexpr std::uint64_t kHeldOut = 6;
}  // namespace streams

using Rng = std::mt19937_64;

}  // namespace aimassist
