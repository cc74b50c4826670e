#ifndef SCMC_RNG_HPP
#define SCMC_RNG_HPP

#include <cstdint>
#include <initializer_list>

#include "scmc/types.hpp"

namespace scmc {

/// Purpose tags keep substreams for different consumers disjoint.
enum class StreamTag : std::uint64_t {
  timing = 0x71,
  sample = 0x5a,
  code = 0xc0,
};

/// Folds a list of identifiers into one 64-bit seed using the SplitMix64
/// finalizer. Distinct key lists give statistically independent seeds.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t part : key) {
    h ^= part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

inline Stream make_stream(std::initializer_list<std::uint64_t> key) {
  return Stream(derive_seed(key));
}

}  // namespace scmc

#endif  // SCMC_RNG_HPP
