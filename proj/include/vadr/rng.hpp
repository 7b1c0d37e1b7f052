// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace vadr {

/// The engine's only randomness source. Draw helpers below avoid the
/// implementation-defined std distributions so seeded runs are portable.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - (Rng::max() % range);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Independent child stream; used to give concurrent workers their own rng.
inline Rng fork(Rng& parent) {
  std::seed_seq seq{static_cast<std::uint32_t>(parent()),
                    static_cast<std::uint32_t>(parent())};
  return Rng(seq);
}

}  // namespace vadr
