#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pb {

/// Stable 64-bit string hash for deriving per-entity seeds.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform draw in [lo, hi). Uses the engine bits directly because the
/// standard distributions are not reproducible across library vendors.
inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi_inclusive) {
  const auto span = static_cast<std::uint64_t>(hi_inclusive - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

}  // namespace pb
