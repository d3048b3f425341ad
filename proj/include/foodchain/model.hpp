#pragma once

// Ratio-dependent three-species food chain with a strong Allee effect in the
// top predator:
//
//   u_t = d1 Δu + u - u² - w1 uv/(u+v)
//   v_t = d2 Δv - a2 v + w2 uv/(u+v) - w3 vr/(v+r)
//   r_t = d3 Δr + r (r - m) (c - w4 r/(v + D3))
//
// Everything downstream works with the dimensionless Params.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "foodchain/error.hpp"

namespace foodchain {

/// Parameters of the dimensional model before scaling.
struct DimensionalParams {
  double A1 = 1.0;  ///< prey growth rate
  double B1 = 1.0;  ///< prey intra-specific competition
  double A2 = 1.0;  ///< middle predator death rate
  double A3 = 1.0;  ///< residual loss density of the top predator
  double C = 1.0;   ///< top predator self-reproduction
  double M = 1.0;   ///< Allee threshold (density)
  double W1 = 1.0;
  double W2 = 1.0;
  double W3 = 1.0;
  double W4 = 1.0;
  double beta1 = 1.0;  ///< handling time of prey by middle predator
  double beta3 = 1.0;  ///< handling time of middle predator by top predator
  double DU = 1.0;
  double DV = 1.0;
  double DR = 1.0;
  double L = std::numbers::pi;  ///< domain length
};

/// Dimensionless parameters.
struct Params {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double w4 = 0.0;
  double a2 = 0.0;
  double c = 0.0;
  double D3 = 0.0;
  double m = 0.0;  ///< Allee threshold
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;

  /// Carrying level cD3/w4 the top predator settles at without middle predator.
  double top_capacity() const { return c * D3 / w4; }
};

namespace detail {
inline void need_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string("parameter ") + name + " must be positive and finite");
  }
}
}  // namespace detail

/// Kinetic parameters only: everything except m positive, m >= 0.
inline void validate_kinetics(const Params& p) {
  detail::need_positive(p.w1, "w1");
  detail::need_positive(p.w2, "w2");
  detail::need_positive(p.w3, "w3");
  detail::need_positive(p.w4, "w4");
  detail::need_positive(p.a2, "a2");
  detail::need_positive(p.c, "c");
  detail::need_positive(p.D3, "D3");
  if (!(p.m >= 0.0) || !std::isfinite(p.m)) {
    throw DomainError("parameter m must be nonnegative and finite");
  }
}

/// Full validation including the diffusivities.
inline void validate(const Params& p) {
  validate_kinetics(p);
  detail::need_positive(p.d1, "d1");
  detail::need_positive(p.d2, "d2");
  detail::need_positive(p.d3, "d3");
}

struct StatePoint {
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;
};

struct Rates {
  double fu = 0.0;
  double fv = 0.0;
  double fr = 0.0;

  double max_abs() const { return std::max({std::abs(fu), std::abs(fv), std::abs(fr)}); }
};

inline Params nondimensionalize(const DimensionalParams& p) {
  const std::array<double, 16> all{p.A1, p.B1, p.A2, p.A3, p.C,     p.M,     p.W1, p.W2,
                                   p.W3, p.W4, p.beta1, p.beta3, p.DU, p.DV, p.DR, p.L};
  for (double x : all) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw DomainError("dimensional parameters must be positive and finite");
    }
  }
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double L2 = p.L * p.L;
  Params q;
  q.w1 = p.W1 / (p.beta1 * p.A1);
  q.a2 = p.A2 / p.A1;
  q.w2 = p.W2 / p.A1;
  q.w3 = p.W3 / (p.beta3 * p.A1);
  q.c = p.C * p.A1 / (p.A1 * p.B1 * p.beta1 * p.beta3);
  q.m = p.M * p.B1 * p.beta1 * p.beta3 / p.A1;
  q.D3 = p.A3 * p.B1 * p.beta1 / p.A1;
  q.w4 = p.W4 * p.B1 / (p.B1 * p.B1 * p.beta1 * p.beta3 * p.beta3);
  q.d1 = p.DU * pi2 / (p.B1 * L2);
  q.d2 = p.DV * pi2 / (p.B1 * p.beta1 * L2);
  q.d3 = p.DR * pi2 / (p.B1 * p.beta1 * p.beta3 * L2);
  return q;
}

/// xy/(x+y), continuously extended by 0 at the origin.
inline double ratio_response(double x, double y) {
  if (x < 0.0 || y < 0.0) {
    throw DomainError("ratio_response: negative density");
  }
  const double s = x + y;
  return s > 0.0 ? x * y / s : 0.0;
}

namespace detail {
// Same as ratio_response but without the sign check; solvers call this on
// fields that may carry rounding-level undershoot.
inline double ratio_unchecked(double x, double y) {
  const double s = x + y;
  return s != 0.0 ? x * y / s : 0.0;
}
}  // namespace detail

/// Kinetics at a point. The v + D3 denominator is safe since D3 > 0.
inline Rates reaction_unchecked(double u, double v, double r, const Params& p) {
  const double uv = detail::ratio_unchecked(u, v);
  const double vr = detail::ratio_unchecked(v, r);
  return {u - u * u - p.w1 * uv, -p.a2 * v + p.w2 * uv - p.w3 * vr,
          r * (r - p.m) * (p.c - p.w4 * r / (v + p.D3))};
}

inline Rates reaction(const StatePoint& s, const Params& p) {
  if (s.u < 0.0 || s.v < 0.0 || s.r < 0.0) {
    throw DomainError("reaction: state must be componentwise nonnegative");
  }
  return reaction_unchecked(s.u, s.v, s.r, p);
}

}  // namespace foodchain
