#pragma once

// Small deterministic generator (splitmix64). The standard <random>
// distributions are implementation-defined, which would break byte-identical
// outputs across toolchains, so every seeded choice in the library goes
// through this.

#include <cstdint>

namespace structreward {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, n); n must be positive
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  int next_range(int lo, int hi) {  // inclusive bounds
    if (hi <= lo) return lo;
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (salt * 0x9e3779b97f4a7c15ULL));
    return r.next_u64();
  }

private:
  std::uint64_t state_;
};

}  // namespace structreward
