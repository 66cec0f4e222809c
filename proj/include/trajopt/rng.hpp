#pragma once

#include <cmath>
#include <cstdint>

namespace trajopt {

// Deterministic, platform-independent PRNG. std::normal_distribution is
// implementation-defined, so gaussians use an explicit Box-Muller transform
// on splitmix64 output. Streams derived from (seed, index) are independent,
// which keeps Monte-Carlo trials order-independent.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static Rng stream(uint64_t seed, uint64_t index) {
    Rng mixer(seed);
    uint64_t a = mixer.next_u64();
    // fold the stream index through one more splitmix round
    Rng folded(a ^ (index * 0x9E3779B97F4A7C15ULL + 0x6A09E667F3BCC909ULL));
    return Rng(folded.next_u64());
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform on [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // standard normal via Box-Muller
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace trajopt
