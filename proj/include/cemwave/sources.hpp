#pragma once

#include <cmath>

#include "cemwave/errors.hpp"

namespace cemwave {

/// Balanced piecewise-constant source: +1 on [0,1/8]^2, -1 on [7/8,1]^2,
/// zero elsewhere. Integrates to zero over the unit square.
inline double source_example1(double x, double y) {
  if (x >= 0.0 && x <= 0.125 && y >= 0.0 && y <= 0.125) return 1.0;
  if (x >= 0.875 && x <= 1.0 && y >= 0.875 && y <= 1.0) return -1.0;
  return 0.0;
}

/// Time factor of the first-derivative Gaussian wavelet with central
/// frequency f0: (t - 2/f0) exp(-pi^2 f0^2 (t - 2/f0)^2).
inline double wavelet_time(double t, double f0) {
  if (!(f0 > 0.0)) throw DomainError("wavelet: f0 must be positive");
  const double s = t - 2.0 / f0;
  const double w = M_PI * f0 * s;
  return s * std::exp(-w * w);
}

/// Spatial envelope 10 delta^-2 exp(-|x-c|^2 / delta^2). `literal_sign`
/// flips the exponent to the (divergent) sign as printed in some sources;
/// it exists only to demonstrate the blow-up and must stay off in runs.
inline double wavelet_space(double x, double y, double delta, double cx, double cy,
                            bool literal_sign = false) {
  if (!(delta > 0.0)) throw DomainError("wavelet: delta must be positive");
  const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
  const double expo = r2 / (delta * delta);
  return 10.0 / (delta * delta) * std::exp(literal_sign ? expo : -expo);
}

/// Full separable wavelet source value.
inline double source_wavelet(double x, double y, double t, double f0, double delta, double cx,
                             double cy, bool literal_sign = false) {
  return wavelet_space(x, y, delta, cx, cy, literal_sign) * wavelet_time(t, f0);
}

} // namespace cemwave
