#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vsearch {

/// SplitMix64 finalizer; used to derive independent, order-free RNG streams.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines a base seed with stream identifiers (trial, scan index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = mix_seed(base);
  for (auto id : ids) s = mix_seed(s ^ mix_seed(id + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

}  // namespace vsearch
