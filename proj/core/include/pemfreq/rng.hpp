#pragma once

#include <cstdint>

namespace pemfreq {

// Counter-based RNG. Every draw is a pure function of
// (seed, stream tag, device id, step index), so per-device updates can run
// on any number of workers and still produce bit-identical results.

namespace rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// 64 random bits for one (seed, tag, device, step) counter.
inline std::uint64_t at(std::uint64_t seed, std::uint32_t tag,
                        std::uint64_t device, std::uint64_t step) {
  std::uint64_t key = seed ^ (device << 1) ^ (step << 32) ^
                      (static_cast<std::uint64_t>(tag) << 56);
  return mix(mix(key) ^ seed);
}

/// Uniform double in [0, 1).
inline double uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform_at(std::uint64_t seed, std::uint32_t tag,
                         std::uint64_t device, std::uint64_t step) {
  return uniform(at(seed, tag, device, step));
}

// Stream tags. Keep these stable: they are part of the reproducibility
// contract (same seed + config => identical runs).
inline constexpr std::uint32_t kTagRequest = 1;
inline constexpr std::uint32_t kTagDrawVolume = 2;
inline constexpr std::uint32_t kTagInitTemp = 3;
inline constexpr std::uint32_t kTagInitTimer = 4;

}  // namespace rng
}  // namespace pemfreq
