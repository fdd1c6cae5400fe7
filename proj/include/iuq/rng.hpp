#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace iuq {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent stream from a master seed and a key path such as
/// (macro, phase, parameter). The result depends only on its arguments, so the
/// draws a task sees never depend on which thread runs it.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = detail::splitmix64(master);
  for (std::uint64_t k : key) h = detail::splitmix64(h ^ detail::splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
  return Rng(derive_seed(master, key));
}

/// Phase tags for stream derivation.
enum class Phase : std::uint64_t {
  Data = 1,
  Bootstrap = 2,
  SimParams = 3,
  Simulation = 4,
  StdBootstrap = 5,
  StdSimulation = 6,
  Pilot = 7,
  Oracle = 8,
  CenterRuns = 9,
};

constexpr std::uint64_t tag(Phase p) { return static_cast<std::uint64_t>(p); }

/// The streams of one phase of one macro run, indexed by item.
struct StreamSet {
  std::uint64_t seed = 0;
  std::uint64_t macro = 0;
  Phase phase = Phase::Data;

  Rng at(std::size_t item) const { return make_stream(seed, {macro, tag(phase), item}); }
  Rng single() const { return make_stream(seed, {macro, tag(phase)}); }
};

}  // namespace iuq
