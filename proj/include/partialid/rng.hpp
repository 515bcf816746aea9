// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace partialid::rng {

// Fixed-increment splitmix64 (Steele, Lea & Flood; Vigna's public-domain
// reference sequence). One 64-bit word of state, passes BigCrush, and cheap
// enough to instantiate per replication.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t operator()() { return next(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound) (Lemire's multiply-with-rejection).
  std::uint64_t uniform_below(std::uint64_t bound) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t threshold = (0ULL - bound) % bound;
      while (lo < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t key) {
  // hash-combine followed by one splitmix finalization round
  h ^= key + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}
}  // namespace detail

// Derives the seed of an independent child stream from a master seed and a
// path of integer keys, e.g. derive(master, rep, kBootstrap, b). Streams are
// a pure function of (seed, keys...), so parallel consumers may draw them in
// any order and still reproduce the same numbers.
template <typename... Keys>
std::uint64_t derive(std::uint64_t seed, Keys... keys) {
  std::uint64_t h = detail::mix_key(seed, 0x5ca1ab1e0ddba11ULL);
  ((h = detail::mix_key(h, static_cast<std::uint64_t>(keys))), ...);
  return h;
}

// Stream-purpose keys used across the library. Keeping them in one place
// guarantees that e.g. data draws and bootstrap draws never share a stream.
inline constexpr std::uint64_t kDataStream = 1;
inline constexpr std::uint64_t kBootstrapStream = 2;

// Multiplicities of a size-n resample with replacement: counts[i] = number of
// times index i was drawn. Sum of counts is exactly n.
inline void bootstrap_counts(SplitMix64& gen, std::size_t n,
                             std::vector<std::uint32_t>& counts) {
  counts.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) ++counts[gen.uniform_below(n)];
}

}  // namespace partialid::rng
