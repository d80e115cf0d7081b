#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "icma/hash.h"

namespace icma {

constexpr std::uint64_t splitmix64_next(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** 1.0 (Blackman & Vigna). Satisfies
/// UniformRandomBitGenerator.
class Xoshiro256 {
public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::array<std::uint64_t, 4> state)
      : s_(state) { }

  /// State filled from four consecutive splitmix64 outputs.
  static constexpr Xoshiro256 from_seed(std::uint64_t seed) {
    std::array<std::uint64_t, 4> s {};
    for (auto &word: s) word = splitmix64_next(seed);
    return Xoshiro256(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_;
};

/// Independent stream for one record: the generator seeded with
/// splitmix64(seed ^ fnv1a(record_id)).
constexpr Xoshiro256 record_stream(std::uint64_t seed, std::string_view record_id) {
  std::uint64_t mixed = seed ^ fnv1a(record_id);
  return Xoshiro256::from_seed(splitmix64_next(mixed));
}

}  // namespace icma
