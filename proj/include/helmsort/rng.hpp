#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace helmsort {

// Deterministic random source. mt19937_64 plus hand-rolled transforms so the
// streams are bit-identical across standard libraries (std::normal_distribution
// and std::uniform_real_distribution are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; the paired deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  // Uniform point on a disk via the polar inverse CDF; always draws exactly two
  // uniforms, keeping downstream streams aligned.
  std::pair<double, double> disk_point(double cx, double cy, double radius) {
    const double r = radius * std::sqrt(uniform());
    const double ang = 2.0 * std::numbers::pi * uniform();
    return {cx + r * std::cos(ang), cy + r * std::sin(ang)};
  }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = eng_();
    while (r >= limit) r = eng_();
    return r % n;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace helmsort
