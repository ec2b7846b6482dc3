#pragma once

#include <cmath>

// Scalar Cook-Torrance GGX pieces. This header is the definition of the
// material model; both the split-sum LUT builder and the Monte-Carlo
// reference integrate these same functions by independent routes.

namespace mvlight::brdf {

inline double d_ggx(double noh, double alpha) {
  double a2 = alpha * alpha;
  double d = noh * noh * (a2 - 1.0) + 1.0;
  return a2 / (3.14159265358979323846 * d * d);
}

// Smith GGX lambda for the height-correlated visibility term.
inline double lambda_smith(double cos_theta, double alpha) {
  double c2 = cos_theta * cos_theta;
  double tan2 = c2 > 0.0 ? (1.0 - c2) / c2 : 1e16;
  return 0.5 * (std::sqrt(1.0 + alpha * alpha * tan2) - 1.0);
}

inline double g_smith_correlated(double nov, double nol, double alpha) {
  return 1.0 / (1.0 + lambda_smith(nov, alpha) + lambda_smith(nol, alpha));
}

inline double fresnel_schlick(double f0, double voh) {
  double fc = std::pow(1.0 - voh, 5.0);
  return f0 + (1.0 - f0) * fc;
}

}  // namespace mvlight::brdf
