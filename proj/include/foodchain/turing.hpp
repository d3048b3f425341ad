#pragma once

// Diffusion-driven (Turing) instability of the interior state E8.
//
// Perturbations ∝ exp(λt + ikx) satisfy det(J − λI − k²D) = 0, i.e.
//   λ³ + μ2(k²) λ² + μ1(k²) λ + μ0(k²) = 0.
// With μ2 > 0 always, instability for k² > 0 can only come from μ0 or
// μ2μ1 − μ0 becoming negative; both are cubics G(k²) = H + D k² + C k⁴ + B k⁶.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foodchain/cubic.hpp"
#include "foodchain/equilibria.hpp"
#include "foodchain/model.hpp"

namespace foodchain {

struct DiffusionMatrix {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;

  static DiffusionMatrix from(const Params& p) { return {p.d1, p.d2, p.d3}; }
};

/// Coefficients of the dispersion cubic, each a polynomial in k² (ascending powers).
struct DispersionCubic {
  std::array<double, 2> mu2{};
  std::array<double, 3> mu1{};
  std::array<double, 4> mu0{};

  double mu2_at(double k2) const { return mu2[0] + k2 * mu2[1]; }
  double mu1_at(double k2) const { return mu1[0] + k2 * (mu1[1] + k2 * mu1[2]); }
  double mu0_at(double k2) const { return mu0[0] + k2 * (mu0[1] + k2 * (mu0[2] + k2 * mu0[3])); }
  double hurwitz_at(double k2) const { return mu2_at(k2) * mu1_at(k2) - mu0_at(k2); }

  /// λ³ + μ2 λ² + μ1 λ + μ0 at fixed k².
  CubicCoefficients characteristic(double k2) const {
    return {1.0, mu2_at(k2), mu1_at(k2), mu0_at(k2)};
  }
};

inline DispersionCubic dispersion_cubic(const Jacobian3& j, const DiffusionMatrix& d) {
  const double J11 = j(0, 0), J12 = j(0, 1), J21 = j(1, 0), J22 = j(1, 1), J23 = j(1, 2),
               J32 = j(2, 1), J33 = j(2, 2);
  DispersionCubic c;
  c.mu2 = {-(J11 + J22 + J33), d.d1 + d.d2 + d.d3};
  c.mu1 = {J11 * J33 + J11 * J22 + J22 * J33 - J32 * J23 - J12 * J21,
           -((d.d3 + d.d1) * J22 + (d.d2 + d.d1) * J33 + (d.d2 + d.d3) * J11),
           d.d2 * d.d3 + d.d2 * d.d1 + d.d1 * d.d3};
  c.mu0 = {J11 * J32 * J23 - J11 * J22 * J33 + J12 * J21 * J33,
           d.d1 * (J22 * J33 - J32 * J23) + d.d2 * J11 * J33 + d.d3 * (J22 * J11 - J12 * J21),
           -(d.d2 * d.d1 * J33 + d.d1 * d.d3 * J22 + d.d2 * d.d3 * J11), d.d1 * d.d2 * d.d3};
  return c;
}

/// All four Routh–Hurwitz conditions at the given k².
inline bool routh_hurwitz_stable(const DispersionCubic& c, double k2) {
  return c.mu2_at(k2) > 0.0 && c.mu1_at(k2) > 0.0 && c.mu0_at(k2) > 0.0 && c.hurwitz_at(k2) > 0.0;
}

enum class GFunction { Mu0, Hurwitz };

inline const char* name(GFunction g) { return g == GFunction::Mu0 ? "mu0" : "mu2*mu1-mu0"; }

/// G(k²) = HH + DD k² + CC k⁴ + BB k⁶.
struct GCoefficients {
  GFunction which = GFunction::Mu0;
  double HH = 0.0;
  double DD = 0.0;
  double CC = 0.0;
  double BB = 0.0;

  double operator()(double k2) const { return HH + k2 * (DD + k2 * (CC + k2 * BB)); }
  double slope(double k2) const { return DD + k2 * (2.0 * CC + 3.0 * k2 * BB); }
  double curvature(double k2) const { return 2.0 * CC + 6.0 * BB * k2; }
  double discriminant() const { return CC * CC - 3.0 * BB * DD; }
};

inline GCoefficients g_coefficients(const Jacobian3& j, const DiffusionMatrix& d, GFunction which) {
  const double J11 = j(0, 0), J12 = j(0, 1), J21 = j(1, 0), J22 = j(1, 1), J23 = j(1, 2),
               J32 = j(2, 1), J33 = j(2, 2);
  const double d1 = d.d1, d2 = d.d2, d3 = d.d3;
  GCoefficients g;
  g.which = which;
  if (which == GFunction::Mu0) {
    g.HH = J11 * J32 * J23 + J12 * J21 * J33 - J11 * J22 * J33;
    g.DD = d1 * (J22 * J33 - J32 * J23) + d2 * J11 * J33 + d3 * (J11 * J22 - J12 * J21);
    g.CC = -d1 * d2 * J33 - d1 * d3 * J22 - d2 * d3 * J11;
    g.BB = d1 * d2 * d3;
  } else {
    g.HH = J11 * J22 * J33 -
           (J11 + J22 + J33) * (J11 * J22 - J12 * J21 + J11 * J33 + J22 * J33 - J23 * J32) -
           J11 * J23 * J32 - J12 * J21 * J33;
    g.DD = d1 * (2 * J11 * J33 + 2 * J11 * J22 + 2 * J22 * J33 + J33 * J33 + J22 * J22 - J12 * J21) +
           d2 * (2 * J22 * J11 + 2 * J22 * J33 + 2 * J33 * J11 + J11 * J11 + J33 * J33 -
                 J21 * J12 - J23 * J32) +
           d3 * (2 * J22 * J11 + 2 * J22 * J33 + 2 * J33 * J11 + J11 * J11 + J22 * J22 - J23 * J32);
    g.CC = -J11 * (d2 + d3) * (2 * d1 + d2 + d3) - J22 * (d1 + d3) * (d1 + 2 * d2 + d3) -
           J33 * (d1 + d2) * (d1 + d2 + 2 * d3);
    g.BB = (d2 + d3) * (d1 * d1 + d2 * d3 + d1 * d2 + d1 * d3);
  }
  return g;
}

/// Stationary point of G with positive curvature, if real and positive.
inline std::optional<double> turing_point(const GCoefficients& g) {
  if (!(g.BB > 0.0)) throw DomainError("turing_point: BB must be positive");
  const double disc = g.discriminant();
  if (!(disc > 0.0)) return std::nullopt;
  const double k2 = (-g.CC + std::sqrt(disc)) / (3.0 * g.BB);
  if (!(k2 > 0.0)) return std::nullopt;
  return k2;
}

/// The minimum criterion 2CC³ − 9DD·CC·BB − 2(CC² − 3DD·BB)^{3/2} + 27BB·HH².
inline double g_min(const GCoefficients& g) {
  const double disc = g.discriminant();
  if (disc < 0.0) throw DomainError("g_min: CC^2 - 3 BB DD must be nonnegative");
  return 2.0 * g.CC * g.CC * g.CC - 9.0 * g.DD * g.CC * g.BB - 2.0 * std::pow(disc, 1.5) +
         27.0 * g.BB * g.HH * g.HH;
}

/// 27·BB²·G(k²_T), the scaled value of G at its minimum.
inline double g_min_direct(const GCoefficients& g, double k2_T) {
  return 27.0 * g.BB * g.BB * g(k2_T);
}

/// Outcome of the three-condition test for one G function.
struct GCheck {
  GCoefficients g;
  bool hh_positive = false;
  bool condition_DD_or_CC = false;
  bool gmin_negative = false;
  bool gmin_direct_negative = false;
  bool gmin_formula_agrees = true;  ///< sign(g_min) == sign(27 BB² G(k²_T))
  std::optional<double> k2_T;
  std::optional<double> gmin;
  bool marginal = false;
};

struct TuringVerdict {
  bool equilibrium_exists = false;
  StatePoint equilibrium;
  bool stable_without_diffusion = false;
  bool condition_DD_or_CC = false;
  bool gmin_negative = false;
  bool turing_unstable = false;
  std::optional<double> k2_T;
  std::optional<GFunction> offending_function;
  /// Same test with condition (3) read as G(k²_T) < 0 instead of the printed g_min.
  bool turing_unstable_direct = false;
  bool marginal = false;
  std::array<GCheck, 2> checks{};
  std::string note;
};

namespace detail {

inline bool is_marginal(double value, double scale) { return std::abs(value) < 1e-12 * scale; }

inline GCheck check_g(const Jacobian3& j, const DiffusionMatrix& d, GFunction which) {
  GCheck c;
  c.g = g_coefficients(j, d, which);
  const GCoefficients& g = c.g;
  c.hh_positive = g.HH > 0.0;
  const double disc = g.discriminant();
  c.condition_DD_or_CC = (g.DD < 0.0 || g.CC < 0.0) && disc > 0.0;
  const double scale = std::max({std::abs(g.HH), std::abs(g.DD), std::abs(g.CC), std::abs(g.BB),
                                 std::numeric_limits<double>::min()});
  c.marginal = is_marginal(g.HH, scale);
  if (disc > 0.0) {
    c.k2_T = turing_point(g);
    c.gmin = g_min(g);
    c.gmin_negative = *c.gmin < 0.0;
    if (c.k2_T) {
      const double direct = g_min_direct(g, *c.k2_T);
      c.gmin_direct_negative = direct < 0.0;
      c.gmin_formula_agrees = c.gmin_direct_negative == (*c.gmin < 0.0);
      c.marginal = c.marginal || is_marginal(*c.gmin, std::abs(2.0 * g.CC * g.CC * g.CC) +
                                                           27.0 * g.BB * g.HH * g.HH);
    }
  }
  return c;
}

}  // namespace detail

/// Three-condition test for a given Jacobian and diffusion matrix.
inline TuringVerdict turing_verdict(const Jacobian3& j, const DiffusionMatrix& d) {
  TuringVerdict v;
  v.equilibrium_exists = true;
  const DispersionCubic disp = dispersion_cubic(j, d);
  v.stable_without_diffusion = routh_hurwitz_stable(disp, 0.0);
  v.checks = {detail::check_g(j, d, GFunction::Mu0), detail::check_g(j, d, GFunction::Hurwitz)};
  for (const GCheck& c : v.checks) {
    v.condition_DD_or_CC = v.condition_DD_or_CC || c.condition_DD_or_CC;
    v.gmin_negative = v.gmin_negative || c.gmin_negative;
    v.marginal = v.marginal || c.marginal;
    const bool all = v.stable_without_diffusion && c.hh_positive && c.condition_DD_or_CC &&
                     c.gmin_negative && c.k2_T.has_value();
    if (v.stable_without_diffusion && c.hh_positive && c.condition_DD_or_CC &&
        c.gmin_direct_negative) {
      v.turing_unstable_direct = true;
    }
    if (all && !v.turing_unstable) {
      v.turing_unstable = true;
      v.k2_T = c.k2_T;
      v.offending_function = c.g.which;
    }
  }
  if (v.turing_unstable != v.turing_unstable_direct) {
    v.note = "printed g_min and 27 BB^2 G(k2_T) disagree in sign";
  }
  if (v.marginal) v.note = "marginal: a deciding quantity is at rounding level";
  if (!v.stable_without_diffusion) v.note = "E8 unstable without diffusion";
  return v;
}

/// Verdict at every admissible interior state (several roots are possible).
inline std::vector<TuringVerdict> turing_verdicts(const Params& p) {
  validate(p);
  std::vector<TuringVerdict> out;
  for (const StatePoint& s : interior_candidates(p)) {
    TuringVerdict v = turing_verdict(jacobian(s, p), DiffusionMatrix::from(p));
    v.equilibrium = s;
    out.push_back(v);
  }
  return out;
}

/// Verdict at the E8 chosen by interior_equilibrium.
inline TuringVerdict turing_unstable(const Params& p) {
  validate(p);
  const Equilibrium e8 = interior_equilibrium(p);
  if (!e8.exists) {
    TuringVerdict v;
    v.note = "no interior equilibrium: " + e8.note;
    return v;
  }
  TuringVerdict v = turing_verdict(jacobian(e8.point, p), DiffusionMatrix::from(p));
  v.equilibrium = e8.point;
  return v;
}

/// Largest Re λ(k²) for each k² in the grid.
inline std::vector<double> growth_rates(const Jacobian3& j, const DiffusionMatrix& d,
                                        std::span<const double> k2_grid) {
  const DispersionCubic disp = dispersion_cubic(j, d);
  std::vector<double> out;
  out.reserve(k2_grid.size());
  for (double k2 : k2_grid) {
    if (k2 < 0.0) throw DomainError("growth_rates: k^2 must be nonnegative");
    out.push_back(cubic_max_real_part(disp.characteristic(k2)));
  }
  return out;
}

/// One row of the k = 0 sign study over the Allee threshold.
struct SignRow {
  double m = 0.0;
  bool e8_exists = false;
  int sign_mu0 = 0;      ///< sign of μ0(0)
  int sign_hurwitz = 0;  ///< sign of (μ2μ1 − μ0)(0)
  bool stable = false;
  double mu0 = 0.0;
  double hurwitz = 0.0;
};

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

inline std::vector<SignRow> sign_table(Params p, std::span<const double> m_values) {
  std::vector<SignRow> rows;
  for (double m : m_values) {
    p.m = m;
    validate_kinetics(p);
    SignRow row;
    row.m = m;
    const Equilibrium e8 = interior_equilibrium(p);
    row.e8_exists = e8.exists;
    if (e8.exists) {
      const DispersionCubic disp = dispersion_cubic(jacobian(e8.point, p), DiffusionMatrix::from(p));
      row.mu0 = disp.mu0_at(0.0);
      row.hurwitz = disp.hurwitz_at(0.0);
      row.sign_mu0 = sign_of(row.mu0);
      row.sign_hurwitz = sign_of(row.hurwitz);
      row.stable = routh_hurwitz_stable(disp, 0.0);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace foodchain
