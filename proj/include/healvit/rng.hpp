#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace healvit {

// Deterministic random stream. Every draw is implemented on top of raw
// mt19937_64 words with fixed arithmetic, so two Rng instances with the same
// seed produce bitwise identical sequences on any platform. Never use
// std::uniform_real_distribution or std::normal_distribution here; their
// output is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Box-Muller. No cached spare: each call consumes
  // exactly two uniforms, which keeps interleaved streams reproducible.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double pi = 3.14159265358979323846;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // Normal(0, stddev) with samples outside clip*stddev redrawn.
  double truncated_normal(double stddev, double clip = 2.0) {
    double z;
    do {
      z = normal();
    } while (std::abs(z) > clip);
    return stddev * z;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace healvit
