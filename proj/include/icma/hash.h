#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace icma {

/// Incremental 64-bit FNV-1a.
class Fnv1a {
public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  constexpr Fnv1a &add_byte(std::uint8_t byte) {
    state_ ^= byte;
    state_ *= kPrime;
    return *this;
  }

  constexpr Fnv1a &add(std::string_view bytes) {
    for (char c: bytes) add_byte(static_cast<std::uint8_t>(c));
    return *this;
  }

  /// Little-endian encoding of the value, always eight bytes.
  constexpr Fnv1a &add(std::int64_t value) {
    auto u = static_cast<std::uint64_t>(value);
    for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(u >> (8 * i)));
    return *this;
  }

  constexpr Fnv1a &add(std::span<const std::int64_t> values) {
    add(static_cast<std::int64_t>(values.size()));
    for (std::int64_t v: values) add(v);
    return *this;
  }

  constexpr std::uint64_t digest() const { return state_; }

private:
  std::uint64_t state_ = kOffset;
};

constexpr std::uint64_t fnv1a(std::string_view bytes) {
  return Fnv1a().add(bytes).digest();
}

}  // namespace icma
