#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace geoevents {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of a named substream of a root seed. Adding a new consumer never
/// shifts the values another consumer sees.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(root ^ splitmix64(h));
}

inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index) {
  return splitmix64(substream_seed(root, name) + splitmix64(index));
}

using Rng = std::mt19937_64;

}  // namespace geoevents
