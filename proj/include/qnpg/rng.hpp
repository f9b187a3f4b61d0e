#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace qnpg {

// Seeded random source used by every sampling operation. Distributions are
// derived from raw 64-bit draws in-house so that streams are reproducible
// across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd gaussian(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Index drawn from the (assumed normalized) probability vector.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = uniform();
    double cdf = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      cdf += probs[i];
      if (u <= cdf) return i;
    }
    return n - 1;
  }

  // Geometric on {1, 2, ...} with P(T = t) = (1 - q) q^{t-1}; mean 1/(1-q).
  int geometric_from_continue_prob(double q) {
    if (q <= 0.0) return 1;
    const double u = uniform();
    const double t = 1.0 + std::floor(std::log(u) / std::log(q));
    if (t < 1.0) return 1;
    if (t > 1e9) return 1000000000;
    return static_cast<int>(t);
  }

  // Geom(1/2) on {1, 2, ...} with P(j) = 2^{-j}. Clamped far beyond any
  // reachable draw to keep 2^j finite downstream.
  int geom_half() {
    const double u = uniform();
    int j = static_cast<int>(std::ceil(-std::log2(u)));
    if (j < 1) j = 1;
    if (j > 60) j = 60;
    return j;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qnpg
