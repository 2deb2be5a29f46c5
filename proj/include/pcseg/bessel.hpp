#pragma once

#include <cmath>
#include <numbers>

namespace pcseg {

/// Bessel function of the first kind, order 1. Power series below |x| = 12,
/// Hankel asymptotic expansion (summed to its smallest term) above.
/// Absolute error is below 1e-12 over the real line.
inline double bessel_j1(double x) {
  if (x < 0.0) return -bessel_j1(-x);
  if (x < 12.0) {
    const double h = 0.5 * x;
    const double h2 = h * h;
    double term = h;
    double sum = term;
    for (int k = 1; k < 60; ++k) {
      term *= -h2 / (static_cast<double>(k) * (k + 1));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  // a_k = prod_{j=1..k} (4 - (2j-1)^2) / (k! 8^k); P takes even k with alternating sign, Q odd k.
  constexpr double mu = 4.0;
  double p = 1.0, q = 0.0;
  double a = 1.0;
  double last = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(a) > last) break; // asymptotic series started to diverge
    last = std::abs(a);
    switch (k % 4) {
    case 1: q += a; break;
    case 2: p -= a; break;
    case 3: q -= a; break;
    default: p += a; break;
    }
    if (std::abs(a) < 1e-17) break;
  }
  const double chi = x - 0.75 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace pcseg
