#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace lbpp {

// All sampling uses the 64-bit Mersenne Twister together with the Boost.Random
// distributions, whose algorithms are fixed in the headers and therefore give
// the same streams on every platform (std:: distributions do not).
using Rng = boost::random::mt19937_64;

// SplitMix64 finalizer, used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for replicate `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

}  // namespace lbpp
