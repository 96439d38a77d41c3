#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dotadmm {

// Deterministic random stream. All simulation randomness flows through this
// wrapper so that a (master_seed, stream_index) pair fully determines every
// draw. We avoid std::*_distribution on purpose: their output is
// implementation-defined, which would break byte-identical reproducibility
// of CSV outputs across standard libraries. The conversions below are fixed
// arithmetic on raw mt19937_64 output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(scramble(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on [-bound, bound].
  double symmetric(double bound) { return bound * (2.0 * uniform01() - 1.0); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Standard normal via Box-Muller; spare value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  // Uniform on the L-infinity ball of the given radius.
  Eigen::VectorXd symmetric_vector(Eigen::Index n, double bound) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = symmetric(bound);
    return v;
  }

  // Derives an independent child seed from a master seed and a stream index.
  // SplitMix64 finalizer applied twice; good avalanche, stable across
  // platforms.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    return mix(mix(master) ^ mix(stream ^ 0xD6E8FEB86659FD93ULL));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t scramble(std::uint64_t seed) {
    // mt19937_64 seeded with raw small integers starts in a low-entropy
    // state; scrambling first decorrelates nearby seeds.
    return mix(seed + 0x632BE59BD9B4E019ULL);
  }

  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dotadmm
