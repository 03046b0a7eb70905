#pragma once

// Seeded deterministic random streams. std::mt19937 plus the standard
// distributions are implementation-defined, so every draw the library makes
// goes through this fixed splitmix64-based generator instead; identical seeds
// give bit-identical results on any platform.

#include <cmath>
#include <cstdint>

namespace ctgnn {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Substream derivation: child call k at layer l of a computation seeded with
// `seed` runs on derive_seed(seed, l, k). Replayable and collision-resistant
// enough for independent-in-practice streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed ^ (a + 0x9e3779b97f4a7c15ull));
  return mix64(h ^ (b + 0xd1b54a32d192ed03ull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), unbiased (Lemire's multiply-shift with
  // rejection).
  int bounded(int bound) {
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * b;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < b) {
      const std::uint64_t t = (0 - b) % b;
      while (low < t) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * b;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<int>(m >> 64);
  }

  // Standard normal via Box-Muller; second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.28318530717958647692 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ctgnn
