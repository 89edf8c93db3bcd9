#pragma once

#include <cmath>
#include <cstdint>

// Fully specified PRNG (splitmix64) so every run is reproducible by
// construction, independent of standard-library distribution details.
namespace sfcn {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, m).
  std::uint64_t below(std::uint64_t m) { return next_u64() % m; }

  // Box-Muller, one value per call (the pair's second half is discarded to
  // keep the stream position independent of call parity).
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from (seed, tags...); used to give every
// dropout site, scene index and shuffle its own substream.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  Rng r(a ^ (b * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
  return r.next_u64();
}

}  // namespace sfcn
