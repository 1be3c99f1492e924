#pragma once

#include <cstdint>
#include <cmath>

namespace wavedecay {

/// Deterministic 64-bit generator (splitmix64 scrambler).
///
/// Used instead of <random> engines + distributions so that every stream is
/// reproducible bit-for-bit regardless of the standard library in use.  All
/// seeded experiments in this project route through this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent substream derived from a master seed, e.g. one per ensemble
  /// member, so results do not depend on evaluation order.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index) {
    Rng r(seed);
    r.state_ += 0x9e3779b97f4a7c15ull * (stream_index + 1);
    r.next_u64();
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wavedecay
