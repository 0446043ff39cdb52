#pragma once

#include <cstdint>

// Deterministic random streams.
//
// All randomness in the simulator is derived from a single 64-bit master
// seed.  Per-trial seeds are hashed from (master_seed, trial_index) and each
// node gets an independent stream per round, hashed from
// (trial_seed, round, node).  Draws therefore never depend on scheduling:
// the same seeds produce bit-identical executions no matter how trials are
// distributed over threads.

namespace stabsim {

constexpr std::uint64_t kSeedGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kSeedGamma);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hash two words into one; used to derive child seeds from a parent seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (salt + kSeedGamma + (seed << 6) + (seed >> 2));
  return splitmix64(s);
}

inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix_seed(master_seed, trial_index);
}

// Stream of draws for one node in one round.
class NodeRng {
 public:
  NodeRng(std::uint64_t trial_seed, std::uint64_t round, std::uint64_t node)
      : state_(mix_seed(mix_seed(trial_seed, round), node)) {}

  explicit NodeRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  // Fair coin.
  bool bit() { return (next() >> 63) != 0; }

  // Uniform draw from {0, ..., n-1}.  Unbiased via rejection sampling.
  std::uint32_t uniform(std::uint32_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return static_cast<std::uint32_t>(v % n);
  }

  // Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace stabsim
