#pragma once

#include <cstdint>
#include <random>

namespace sprinkle {

/// SplitMix64 finalizer. Used to turn (masterSeed, stream) pairs into
/// decorrelated 64-bit seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic sub-seed for replica `replica` of stream `stream`.
/// Replica r of an experiment always sees the same generator state
/// regardless of thread scheduling.
constexpr std::uint64_t sub_seed(std::uint64_t master, std::uint64_t replica,
                                 std::uint64_t stream = 0) noexcept
{
  return splitmix64(splitmix64(master ^ splitmix64(stream + 0x5bd1e995ULL)) + replica);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t replica, std::uint64_t stream = 0)
{
  return Rng(sub_seed(master, replica, stream));
}

} // namespace sprinkle
