#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qjf {

/// All stochastic code draws from this engine. Variates below are hand-pinned
/// transformations of the raw bit stream so that a given seed produces the
/// same sequence on every platform and standard library.
using RngEngine = std::mt19937_64;

/// SplitMix64 mixing step.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Stable per-molecule stream seed: results are a function of
/// (master_seed, index, stream) only, never of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index,
                                    std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(master_seed) ^ index) ^ stream);
}

/// Named sub-streams hanging off one (master_seed, molecule_index) pair.
/// Lifetime draws are arm-independent, which is what makes paired arms share
/// per-molecule triplet lifetimes for free.
enum SeedStream : std::uint64_t {
  kStreamLifetime = 0,
  kStreamArmWithout = 1,
  kStreamArmWith = 2,
  kStreamBootstrap = 3,
};

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(RngEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential waiting time at the given rate; strictly positive.
inline double exponential(RngEngine& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

/// One standard normal (Box-Muller, fixed two-draw form, no cached spare).
inline double standard_normal(RngEngine& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(RngEngine& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

}  // namespace qjf
