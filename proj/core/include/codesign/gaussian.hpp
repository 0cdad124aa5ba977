#pragma once

#include <cmath>
#include <numbers>

namespace codesign::gaussian {

inline double pdf(double x, double mu, double sigma) {
  if (std::isinf(x)) return 0.0;
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double cdf(double x, double mu, double sigma) {
  if (x == -INFINITY) return 0.0;
  if (x == INFINITY) return 1.0;
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

/// Upper tail 1 - F(x), evaluated without cancellation.
inline double sf(double x, double mu, double sigma) {
  if (x == -INFINITY) return 1.0;
  if (x == INFINITY) return 0.0;
  return 0.5 * std::erfc((x - mu) / (sigma * std::numbers::sqrt2));
}

/// Integral of r f(r) over (-inf, alpha]: the price-weighted probability mass
/// below the threshold, mu F(alpha) - sigma^2 f(alpha).
inline double partial_expectation(double alpha, double mu, double sigma) {
  if (alpha == -INFINITY) return 0.0;
  if (alpha == INFINITY) return mu;
  return mu * cdf(alpha, mu, sigma) - sigma * sigma * pdf(alpha, mu, sigma);
}

}  // namespace codesign::gaussian
