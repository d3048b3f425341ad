#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "foodchain/cubic.hpp"
#include "foodchain/model.hpp"

namespace foodchain {

struct Equilibrium {
  std::string label;
  StatePoint point;
  bool exists = false;
  std::string note;
  /// Further admissible roots when the defining cubic has several (E7, E8).
  std::vector<StatePoint> alternatives;
};

/// 3×3 real matrix, row-major.
struct Jacobian3 {
  std::array<std::array<double, 3>, 3> a{};

  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }
  double trace() const { return a[0][0] + a[1][1] + a[2][2]; }
  /// Sum of the principal 2×2 minors.
  double minor_sum() const {
    return a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] +
           a[1][1] * a[2][2] - a[1][2] * a[2][1];
  }
  double determinant() const {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  }
};

/// Linearization of the kinetics in the form used for the dispersion analysis.
///
/// J22 and J33 are the equilibrium-reduced expressions (they drop terms that
/// vanish when (v_t, r_t) = 0), so the matrix equals the true derivative of
/// `reaction` only at interior steady states. Ratio terms whose denominator
/// vanishes (u = v = 0 or v = r = 0) carry a vanishing prefactor and are
/// extended by zero.
inline Jacobian3 jacobian(const StatePoint& s, const Params& p) {
  if (s.u < 0.0 || s.v < 0.0 || s.r < 0.0) {
    throw DomainError("jacobian: state must be componentwise nonnegative");
  }
  const double su = s.u + s.v;
  const double sr = s.v + s.r;
  const double su2 = su * su;
  const double sr2 = sr * sr;
  const double vd = s.v + p.D3;
  Jacobian3 j;
  j(0, 0) = su > 0.0 ? s.u * (-1.0 + p.w1 * s.v / su2) : 0.0;
  j(0, 1) = su > 0.0 ? -p.w1 * s.u * s.u / su2 : 0.0;
  j(1, 0) = su > 0.0 ? p.w2 * s.v * s.v / su2 : 0.0;
  const double prey_part = su > 0.0 ? -p.w2 * s.u / su2 : 0.0;
  const double pred_part = sr > 0.0 ? p.w3 * s.r / sr2 : 0.0;
  j(1, 1) = s.v * (prey_part + pred_part);
  j(1, 2) = sr > 0.0 ? -p.w3 * s.v * s.v / sr2 : 0.0;
  j(2, 1) = s.r * s.r * (s.r - p.m) * p.w4 / (vd * vd);
  j(2, 2) = -s.r * (s.r - p.m) * p.w4 / vd;
  return j;
}

/// Routh–Hurwitz test on det(λI − J): all eigenvalues in the open left half plane.
inline bool ode_stable(const Jacobian3& j) {
  const double a2 = -j.trace();
  const double a1 = j.minor_sum();
  const double a0 = -j.determinant();
  return a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && a2 * a1 - a0 > 0.0;
}

/// Cubic whose roots give u at E7 (r = m).
inline CubicCoefficients allee_coexistence_cubic(const Params& p) {
  const double w1 = p.w1, w2 = p.w2, w3 = p.w3, a2 = p.a2, m = p.m;
  CubicCoefficients c;
  c.c3 = w2;
  c.c2 = -(a2 * w1 + w2 * (-w1 + (2.0 + m)));
  c.c1 = a2 * w1 - w1 * w2 + w2 + m * w1 * w3 - m * (-a2 * w1 + 2.0 * w2 * (w1 - 1.0));
  c.c0 = m * (w1 - 1.0) * (w2 + w1 * (w3 - (w2 - a2)));
  return c;
}

/// Cubic α1 u³ − α2 u² − α3 u − α4 whose roots give u at E8.
inline CubicCoefficients interior_cubic(const Params& p) {
  const double w1 = p.w1, w2 = p.w2, w3 = p.w3, w4 = p.w4, a2 = p.a2, c = p.c, D3 = p.D3;
  const double alpha1 = w2 * (w4 + c);
  const double alpha2 =
      w4 * (a2 * w1 - w1 * w2 + 2.0 * w2) + c * (w2 * (2.0 + D3) + w1 * (w3 + a2 - w2));
  const double alpha3 = -w2 * (w4 + c) - c * D3 * w1 * (w3 + (a2 - 2.0 * w2)) -
                        (w1 * (a2 - w2) * w4 + c * (2.0 * D3 * w2 + w1 * (w3 + a2 - w2)));
  const double alpha4 = -c * D3 * (w1 - 1.0) * (w2 + w1 * (w3 + a2 - w2));
  return {alpha1, -alpha2, -alpha3, -alpha4};
}

/// v on the prey nullcline 1 − u − w1 v/(u+v) = 0.
inline double prey_nullcline_v(double u, double w1) { return (1.0 - u) * u / (w1 + u - 1.0); }

inline std::vector<Equilibrium> boundary_equilibria(const Params& p) {
  validate_kinetics(p);
  const double cap = p.top_capacity();
  std::vector<Equilibrium> out;
  out.push_back({"E0", {0.0, 0.0, 0.0}, true, "", {}});
  out.push_back({"E1", {1.0, 0.0, 0.0}, true, "", {}});
  if (p.m > 0.0) {
    out.push_back({"E2", {0.0, 0.0, p.m}, true, "", {}});
  } else {
    out.push_back({"E2", {0.0, 0.0, 0.0}, false, "m = 0: coincides with E0", {}});
  }
  out.push_back({"E3", {0.0, 0.0, cap}, true, "", {}});

  Equilibrium e4{"E4", {}, false, "", {}};
  const double u4 = (p.w2 - p.w1 * p.w2 + p.a2 * p.w1) / p.w2;
  const double v4 = (p.w2 - p.a2) * u4 / p.a2;
  if (!(p.w2 > p.a2)) {
    e4.note = "requires w2 > a2";
  } else if (!(p.w2 > p.w1 * (p.w2 - p.a2))) {
    e4.note = "requires w2 > w1 (w2 - a2)";
  } else {
    e4.exists = true;
  }
  e4.point = e4.exists ? StatePoint{u4, v4, 0.0} : StatePoint{std::max(u4, 0.0), std::max(v4, 0.0), 0.0};
  out.push_back(e4);

  out.push_back({"E5", {1.0, 0.0, cap}, true, "", {}});
  if (p.m > 0.0) {
    out.push_back({"E6", {1.0, 0.0, p.m}, true, "", {}});
  } else {
    out.push_back({"E6", {1.0, 0.0, 0.0}, false, "m = 0: coincides with E1", {}});
  }
  return out;
}

namespace detail {

// Roots of `cubic` in the open window (1 − w1, 1), ascending.
inline std::vector<double> window_roots(const CubicCoefficients& cubic, double w1) {
  std::vector<double> out;
  const double lo = std::max(0.0, 1.0 - w1);
  for (const RealRoot& root : cubic_real_roots(cubic)) {
    if (root.value > lo && root.value < 1.0) out.push_back(root.value);
  }
  return out;
}

}  // namespace detail

/// E7 = (ũ, ṽ, m): coexistence with the top predator held at the Allee threshold.
inline Equilibrium coexistence_with_allee(const Params& p) {
  validate_kinetics(p);
  Equilibrium e{"E7", {}, false, "", {}};
  if (!(p.m > 0.0)) {
    e.note = "m = 0: E7 is not a distinct state";
    return e;
  }
  if (!(p.w1 < 1.0)) {
    e.note = "requires w1 < 1";
    return e;
  }
  std::vector<StatePoint> pts;
  for (double u : detail::window_roots(allee_coexistence_cubic(p), p.w1)) {
    const double v = prey_nullcline_v(u, p.w1);
    if (v > 0.0) pts.push_back({u, v, p.m});
  }
  if (pts.empty()) {
    e.note = "no root of the E7 cubic in (1 - w1, 1)";
    return e;
  }
  e.exists = true;
  e.point = pts.front();
  e.alternatives.assign(pts.begin() + 1, pts.end());
  if (!e.alternatives.empty()) {
    e.note = std::to_string(pts.size()) + " admissible roots; smallest u used";
  }
  return e;
}

/// All admissible interior states (u*, v*, r*), ascending in u*.
inline std::vector<StatePoint> interior_candidates(const Params& p) {
  validate_kinetics(p);
  std::vector<StatePoint> pts;
  if (!(p.w1 < 1.0)) return pts;
  for (double u : detail::window_roots(interior_cubic(p), p.w1)) {
    const double v = prey_nullcline_v(u, p.w1);
    const double r = p.c * (v + p.D3) / p.w4;
    if (v > 0.0 && r > 0.0) pts.push_back({u, v, r});
  }
  return pts;
}

/// E8. With several admissible roots the first ODE-stable one is used (the
/// smallest u if none is stable); the rest go to `alternatives`.
inline Equilibrium interior_equilibrium(const Params& p) {
  Equilibrium e{"E8", {}, false, "", {}};
  if (!(p.w1 < 1.0)) {
    validate_kinetics(p);
    e.note = "requires w1 < 1";
    return e;
  }
  std::vector<StatePoint> pts = interior_candidates(p);
  if (pts.empty()) {
    e.note = "no root of the E8 cubic in (1 - w1, 1)";
    return e;
  }
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (ode_stable(jacobian(pts[i], p))) {
      chosen = i;
      break;
    }
  }
  e.exists = true;
  e.point = pts[chosen];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i != chosen) e.alternatives.push_back(pts[i]);
  }
  if (!e.alternatives.empty()) {
    e.note = std::to_string(pts.size()) + " admissible roots; using u* = " +
             std::to_string(e.point.u) +
             (ode_stable(jacobian(e.point, p)) ? " (ODE-stable)" : " (none ODE-stable)");
  }
  return e;
}

/// E0 … E8 in order.
inline std::vector<Equilibrium> all_equilibria(const Params& p) {
  std::vector<Equilibrium> out = boundary_equilibria(p);
  out.push_back(coexistence_with_allee(p));
  out.push_back(interior_equilibrium(p));
  return out;
}

}  // namespace foodchain
