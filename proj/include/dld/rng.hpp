#ifndef DLD_RNG_HPP
#define DLD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace dld {

/// Default root seed used by every preset.
inline constexpr std::uint64_t kDefaultSeed = 19260817;

/// Seeded random stream.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// derives all variates with hand-written transforms so that a given seed
/// produces the same numbers with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  /// Independent stream keyed by a root seed and a path of integers
  /// (e.g. {stream_kind, cell, sample}). Streams for distinct paths do not
  /// overlap in practice.
  static Rng derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix(root ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t p : path) h = splitmix(h ^ splitmix(p + 0x9e3779b97f4a7c15ULL));
    return Rng(h);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  /// Always consumes exactly one draw, including for p = 0 or p = 1.
  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; consumes two draws, caches nothing.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  static std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace dld

#endif  // DLD_RNG_HPP
