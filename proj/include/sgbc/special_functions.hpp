#pragma once

#include <cmath>
#include <stdexcept>

namespace sgbc {

inline constexpr double kBesselMaxArg = 60.0;
inline constexpr double kI1RatioSwitch = 1e-4;

/// Modified Bessel function of the first kind, order one, on [0, 60].
/// Power series sum_k (x/2)^(2k+1) / (k! (k+1)!); every term is positive, so
/// there is no cancellation and the relative error stays near rounding level.
inline double bessel_i1(double x) {
  if (!(x >= 0.0 && x <= kBesselMaxArg)) {
    throw std::domain_error("bessel_i1: argument must lie in [0, 60]");
  }
  if (x == 0.0) return 0.0;
  const double half = 0.5 * x;
  const double half_sq = half * half;
  double term = half;
  double sum = term;
  for (int k = 0; k < 500; ++k) {
    term *= half_sq / ((k + 1.0) * (k + 2.0));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

/// I1(z) / z, continuous at z = 0 where it tends to 1/2.
inline double i1_ratio(double z) {
  if (!(z >= 0.0)) throw std::domain_error("i1_ratio: argument must be nonnegative");
  if (z <= kI1RatioSwitch) return 0.5 + z * z / 16.0;
  return bessel_i1(z) / z;
}

}  // namespace sgbc
