#pragma once

#include <cstdint>

namespace lfpp {

// Stream seed derivation: s = root ^ (stream * 0x9E3779B97F4A7C15), then two
// rounds of the splitmix64 finalizer.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t s = root ^ (stream * 0x9E3779B97F4A7C15ULL);
  for (int round = 0; round < 2; ++round) {
    s ^= s >> 30;
    s *= 0xBF58476D1CE4E5B9ULL;
    s ^= s >> 27;
    s *= 0x94D049BB133111EBULL;
    s ^= s >> 31;
  }
  return s;
}

}  // namespace lfpp
