#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace diagcoag {

// Grids in this library are uniform in tau = log x with m nodes per factor
// of two, so x/2 is always exactly m nodes back and one octave of a
// composite Simpson rule spans exactly m (even) intervals.

inline double octave_step(int nodes_per_octave) {
  return M_LN2 / nodes_per_octave;
}

inline void require_even_octave(int nodes_per_octave) {
  if (nodes_per_octave < 2 || nodes_per_octave % 2 != 0) {
    throw std::invalid_argument("nodes per octave must be even and >= 2");
  }
}

/// Composite Simpson weights over one octave (m intervals), without the
/// dtau factor: 1/3, 4/3, 2/3, ..., 4/3, 1/3.
inline std::vector<double> octave_simpson_weights(int nodes_per_octave) {
  require_even_octave(nodes_per_octave);
  std::vector<double> w(static_cast<std::size_t>(nodes_per_octave) + 1);
  for (int r = 0; r <= nodes_per_octave; ++r) {
    if (r == 0 || r == nodes_per_octave) {
      w[r] = 1.0 / 3.0;
    } else {
      w[r] = (r % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
    }
  }
  return w;
}

/// Composite Simpson rule for uniformly spaced samples (odd count).
inline double simpson(std::span<const double> f, double step) {
  const std::size_t n = f.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("simpson: need an odd number (>= 3) of samples");
  }
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    (i % 2 == 1 ? odd : even) += f[i];
  }
  return step / 3.0 * (f.front() + 4.0 * odd + 2.0 * even + f.back());
}

/// Cubic Hermite interpolation on a cell of width `width`, local coordinate
/// s in [0, width]; d0/d1 are derivatives with respect to the same variable.
inline double hermite(double s, double width, double y0, double y1, double d0,
                      double d1) {
  const double t = s / width;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y0 + h10 * width * d0 + h01 * y1 + h11 * width * d1;
}

/// Derivative of the cubic Hermite interpolant with respect to s.
inline double hermite_slope(double s, double width, double y0, double y1,
                            double d0, double d1) {
  const double t = s / width;
  const double t2 = t * t;
  const double dh00 = 6.0 * t2 - 6.0 * t;
  const double dh10 = 3.0 * t2 - 4.0 * t + 1.0;
  const double dh01 = -6.0 * t2 + 6.0 * t;
  const double dh11 = 3.0 * t2 - 2.0 * t;
  return (dh00 * y0 + dh01 * y1) / width + dh10 * d0 + dh11 * d1;
}

}  // namespace diagcoag
