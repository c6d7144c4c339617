#include <cmath>
#include <numbers>

#include "qflow/potential.hpp"

namespace qflow {

double bessel_i0_scaled(double x) {
  if (!(x >= 0)) throw DomainError("bessel_i0_scaled: argument must be non-negative");
  if (x <= 20) {
    // sum (x^2/4)^k / (k!)^2, all terms positive
    const double q = 0.25 * x * x;
    double term = 1, sum = 1;
    for (int k = 1; k < 200; ++k) {
      term *= q / (double(k) * k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(-x) * sum;
  }
  // Asymptotic series; at x > 20 its smallest term is below 1e-17.
  double term = 1, sum = 1;
  for (int k = 1; k < 60; ++k) {
    const double next = term * (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * x);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2 * std::numbers::pi * x);
}

double bessel_i0(double x) { return std::exp(x) * bessel_i0_scaled(x); }

double c1_ratio(double xi) { return bessel_i0_scaled(xi) / bessel_i0_scaled(0.5 * xi); }

double constant_C1_prefactor() {
  return std::sqrt(3.0) / (9 * std::sqrt(2 * std::numbers::pi) * std::numbers::e);
}

double constant_C1() {
  // The ratio starts at 1, dips below its limit 1/sqrt(2) and approaches
  // the limit from below as 1/sqrt(2) (1 - 1/(8 xi)); the infimum is an
  // interior minimum.
  double best_x = 0, best = c1_ratio(0);
  const int samples = 4000;
  for (int i = 0; i <= samples; ++i) {
    const double x = 1e-3 * std::pow(1e6, double(i) / samples);
    const double r = c1_ratio(x);
    if (r < best) {
      best = r;
      best_x = x;
    }
  }
  double lo = best_x / std::pow(1e6, 1.0 / samples), hi = best_x * std::pow(1e6, 1.0 / samples);
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = c1_ratio(a), fb = c1_ratio(b);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = c1_ratio(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = c1_ratio(b);
    }
  }
  best = std::min({best, fa, fb, 1 / std::sqrt(2.0)});
  return constant_C1_prefactor() * best;
}

} // namespace qflow
