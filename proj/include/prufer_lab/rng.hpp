#pragma once

#include <cstdint>
#include <random>

namespace prufer_lab {

// Identifies one realization of an ensemble. Every random stream used for the
// realization is derived from (master, index, stream), so realizations can be
// generated in any order and on any worker.
struct SeedKey {
  std::uint64_t master = 0;
  std::uint64_t index = 0;

  friend bool operator==(const SeedKey&, const SeedKey&) = default;
};

enum class Stream : std::uint64_t {
  kPath = 0x7061746875ULL,
  kSdeNoise = 0x7364656e6fULL,
  kPermutation = 0x7065726d75ULL,
  kSampling = 0x73616d706cULL,
};

namespace detail {

// SplitMix64 finaliser; a bijection on 64-bit words with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

constexpr std::uint64_t derive_seed(SeedKey key, Stream stream) noexcept {
  std::uint64_t h = detail::mix64(key.master);
  h = detail::mix64(h ^ key.index);
  h = detail::mix64(h ^ static_cast<std::uint64_t>(stream));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(SeedKey key, Stream stream) {
  return Engine(derive_seed(key, stream));
}

}  // namespace prufer_lab
