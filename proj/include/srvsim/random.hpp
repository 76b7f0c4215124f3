#pragma once

// Counter-based deterministic random streams. A stream's outputs are a pure
// function of (seed, derivation path, draw index), so Monte Carlo results do
// not depend on how samples are partitioned across workers, and a fixed seed
// is bit-reproducible across runs.

#include <algorithm>
#include <cstdint>

#include "srvsim/geometry.hpp"

namespace srvsim {

namespace detail {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ull;

// SplitMix64 finalizer (Steele, Lea & Flood).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : state_(detail::mix64(seed + detail::kGamma)) {}

  // Independent child stream keyed by (this stream, index). Pure: does not
  // advance this stream, and the same index always yields the same child.
  RandomStream substream(std::uint64_t index) const {
    return RandomStream(detail::mix64(state_ ^ detail::mix64(index + detail::kStreamSalt)), RawTag{});
  }

  std::uint64_t next_u64() {
    state_ += detail::kGamma;
    return detail::mix64(state_);
  }

  // Uniform double in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  struct RawTag {};
  RandomStream(std::uint64_t raw_state, RawTag) : state_(raw_state) {}

  std::uint64_t state_;
};

// Uniform draw on the unit sphere: z uniform in [-1, 1), azimuth uniform in
// [0, 2*pi). Draw order (z first) is part of the reproducibility contract.
inline UnitVec3 sample_unit_sphere(RandomStream& stream) {
  const double z = 2.0 * stream.next_unit() - 1.0;
  const double phi = kTwoPi * stream.next_unit();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVec3(r * std::cos(phi), r * std::sin(phi), z);
}

// Uniform angle in [0, 2*pi).
inline PlaneAngle sample_plane_angle(RandomStream& stream) {
  return PlaneAngle(kTwoPi * stream.next_unit());
}

}  // namespace srvsim
