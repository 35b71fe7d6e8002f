#pragma once
// Deterministic RNG helpers. All randomness in the library flows through Rng
// so that runs are reproducible from (seed, config) alone; uniform/gaussian
// draws are implemented explicitly because std::*_distribution output is
// implementation-defined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace summax {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Named sub-streams derived from one user-facing seed (env vs policy etc.).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream ^ 0xa5a5a5a5a5a5a5a5ull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  // uniform double in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::uint64_t bits() { return gen_(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= lim);
    return v % n;
  }

  // standard normal, Box-Muller with cached spare
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Inverse-CDF draw over an inclusive prefix-sum array; u in [0,1).
inline int sample_from_cumulative(std::span<const double> cum, double u) {
  const double target = u * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  auto idx = static_cast<int>(it - cum.begin());
  return std::min(idx, static_cast<int>(cum.size()) - 1);
}

}  // namespace summax
