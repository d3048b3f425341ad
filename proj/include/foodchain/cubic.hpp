#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "foodchain/error.hpp"

namespace foodchain {

/// c3·x³ + c2·x² + c1·x + c0
struct CubicCoefficients {
  double c3 = 1.0;
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double operator()(double x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
  double derivative(double x) const { return (3.0 * c3 * x + 2.0 * c2) * x + c1; }
  double scale() const {
    return std::max({1.0, std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  }
};

struct RealRoot {
  double value = 0.0;
  int multiplicity = 1;
};

namespace detail {

// Newton steps that are kept only while they reduce |p(x)|.
inline double polish_root(const CubicCoefficients& p, double x) {
  double fx = std::abs(p(x));
  for (int it = 0; it < 50 && fx > 0.0; ++it) {
    const double dp = p.derivative(x);
    if (dp == 0.0) break;
    const double next = x - p(x) / dp;
    const double fn = std::abs(p(next));
    if (!(fn < fx)) break;
    x = next;
    fx = fn;
  }
  return x;
}

// Roots of the monic cubic x³ + a x² + b x + c. The complex pair is reported
// as real (double) when its imaginary part is at rounding level.
inline std::vector<double> monic_real_roots(double a, double b, double c) {
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double q3 = q * q * q;
  const double shift = a / 3.0;
  std::vector<double> roots;
  if (r * r < q3) {
    const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
    const double amp = -2.0 * std::sqrt(q);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    roots = {amp * std::cos(theta / 3.0) - shift, amp * std::cos((theta + two_pi) / 3.0) - shift,
             amp * std::cos((theta - two_pi) / 3.0) - shift};
  } else {
    const double big_a = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    const double big_b = big_a != 0.0 ? q / big_a : 0.0;
    roots.push_back(big_a + big_b - shift);
    const double imag = 0.5 * std::sqrt(3.0) * (big_a - big_b);
    const double size = std::max({1.0, std::abs(big_a), std::abs(big_b)});
    if (std::abs(imag) <= 1e-7 * size) {
      const double re = -0.5 * (big_a + big_b) - shift;
      roots.push_back(re);
      roots.push_back(re);
    }
  }
  return roots;
}

}  // namespace detail

/// All real roots, ascending, polished by Newton's method, with multiplicities.
inline std::vector<RealRoot> cubic_real_roots(const CubicCoefficients& p) {
  if (p.c3 == 0.0 || !std::isfinite(p.c3)) {
    throw DomainError("cubic_real_roots: leading coefficient must be nonzero");
  }
  std::vector<double> raw = detail::monic_real_roots(p.c2 / p.c3, p.c1 / p.c3, p.c0 / p.c3);
  for (double& x : raw) x = detail::polish_root(p, x);
  std::sort(raw.begin(), raw.end());

  // Roots that coincide to within the conditioning of a multiple root are merged.
  std::vector<RealRoot> out;
  for (double x : raw) {
    if (!out.empty()) {
      RealRoot& last = out.back();
      const double tol = 1e-6 * std::max(1.0, std::abs(x));
      if (std::abs(x - last.value) <= tol) {
        last.value = (last.value * last.multiplicity + x) / (last.multiplicity + 1);
        ++last.multiplicity;
        continue;
      }
    }
    out.push_back({x, 1});
  }
  return out;
}

/// Largest real part among all three (possibly complex) roots.
inline double cubic_max_real_part(const CubicCoefficients& p) {
  const std::vector<RealRoot> real = cubic_real_roots(p);
  int count = 0;
  for (const RealRoot& r : real) count += r.multiplicity;
  if (count == 3) return real.back().value;
  // Deflate by the single real root; the remaining quadratic has a complex pair.
  const double a = p.c2 / p.c3;
  const double x1 = real.front().value;
  return std::max(x1, -0.5 * (a + x1));
}

}  // namespace foodchain
