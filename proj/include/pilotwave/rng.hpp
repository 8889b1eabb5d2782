#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pw {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard; the value mappings below are hand-rolled because the standard
// library distributions are not bit-stable across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; consumes a variable number of draws but is
  // deterministic for a fixed seed.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; n here is always far below
    // 2^53 (grid cells, sample counts), so scaled multiply is exact enough
    // and keeps the draw count fixed.
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Derives an independent stream; used to give each scenario stage its own
  // substream so stages can be reordered without perturbing each other.
  Rng fork(std::uint64_t salt) {
    return Rng(next_u64() ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pw
