#pragma once

#include <cstdint>
#include <initializer_list>

namespace kt {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hash a root seed with a tuple of counters into one 64-bit word. Each
// distinct key gives an independent stream position, so draws do not depend
// on evaluation order.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double counter_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
  return to_unit(stream_key(seed, counters));
}

}  // namespace kt
