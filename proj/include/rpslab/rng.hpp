#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rpslab {

// SplitMix64 finalizer, used as the mixing function for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream purposes for derived seeds. Every RNG stream in a campaign is keyed
// by (base_seed, lr index, run index, agent index, stream purpose), so any
// single run is reproducible in isolation.
enum class Stream : std::uint64_t {
  Init = 1,     // network weight initialization
  Explore = 2,  // epsilon coin and exploratory action draws
  Sample = 3,   // replay buffer sampling
  Policy = 4,   // random-policy control agent
};

// Order-sensitive fold of the parts into the base seed (splitmix64 mixing).
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ull);
  for (std::uint64_t p : parts) {
    h = mix64(h ^ (p + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t lr_index,
                                 std::uint64_t run_index, std::uint64_t agent_index,
                                 Stream stream) {
  return derive_seed(base, {lr_index, run_index, agent_index,
                            static_cast<std::uint64_t>(stream)});
}

// mt19937_64 with hand-coded draw algorithms. std::*_distribution output is
// implementation-defined; these draws are not, which keeps logs and
// checkpoints bit-stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n), exact via rejection.
  int uniform_index(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<int>(r % un);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rpslab
