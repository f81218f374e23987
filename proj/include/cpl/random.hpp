#pragma once

#include <cstdint>
#include <random>

namespace cpl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index) {
  return derive_seed(derive_seed(base, stream), index);
}

// Named streams so that each consumer of randomness is independent of the others.
namespace stream {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kNegatives = 3;
inline constexpr std::uint64_t kAugment = 4;
inline constexpr std::uint64_t kSelection = 5;
inline constexpr std::uint64_t kDataset = 6;
inline constexpr std::uint64_t kPool = 7;
inline constexpr std::uint64_t kInconsistency = 8;
inline constexpr std::uint64_t kFeatures = 9;
}  // namespace stream

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cpl
