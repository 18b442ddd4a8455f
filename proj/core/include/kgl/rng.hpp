#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "kgl/lattice.hpp"

namespace kgl {

// Gaussian stream with an explicit Box-Muller on top of mt19937_64.
// std::normal_distribution is implementation-defined, which would break
// byte-identical reruns across standard libraries; this one is pinned.
class GaussianRng {
 public:
  explicit GaussianRng(uint64_t seed) : eng_(seed) {}

  // uniform in (0, 1], never exactly 0 so log() below is safe
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
  }

  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline RealField gaussian_field(const LatticeGrid& grid, uint64_t seed) {
  GaussianRng rng(seed);
  RealField f(grid);
  for (int i = 0; i < grid.sites(); ++i) f.values[i] = rng.gauss();
  return f;
}

}  // namespace kgl
