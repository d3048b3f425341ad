#pragma once

// Method of lines on x ∈ [0, π]: Chebyshev collocation in space, zero-flux
// ends, IMEX time stepping (diffusion implicit, kinetics explicit).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "foodchain/error.hpp"
#include "foodchain/model.hpp"

namespace foodchain {

struct Grid1D {
  int N = 0;
  Eigen::VectorXd x;        ///< ascending nodes on [0, π], x(0) = 0, x(N-1) = π
  Eigen::VectorXd weights;  ///< Clenshaw–Curtis weights on [0, π]
  Eigen::MatrixXd D1;
  Eigen::MatrixXd D2;
  /// Boundary values from interior values: u_B = M·u_I enforces D1·u = 0 at both ends.
  Eigen::MatrixXd M;
  /// Interior second-derivative operator with the boundary eliminated.
  Eigen::MatrixXd L;

  int interior() const { return N - 2; }
  double length() const { return std::numbers::pi; }
};

namespace detail {

// Clenshaw–Curtis weights on [-1, 1] for the points cos(πj/n), j = 0..n.
inline Eigen::VectorXd clenshaw_curtis(int N) {
  const int n = N - 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n - 1);
  auto theta = [n](int j) { return std::numbers::pi * j / n; };
  if (n % 2 == 0) {
    w(0) = w(n) = 1.0 / (n * double(n) - 1.0);
    for (int k = 1; k < n / 2; ++k)
      for (int j = 1; j < n; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * theta(j)) / (4.0 * k * k - 1.0);
    for (int j = 1; j < n; ++j) v(j - 1) -= std::cos(n * theta(j)) / (n * double(n) - 1.0);
  } else {
    w(0) = w(n) = 1.0 / (n * double(n));
    for (int k = 1; k <= (n - 1) / 2; ++k)
      for (int j = 1; j < n; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * theta(j)) / (4.0 * k * k - 1.0);
  }
  w.segment(1, n - 1) = 2.0 * v / n;
  return w;
}

}  // namespace detail

/// Chebyshev–Gauss–Lobatto grid with N points mapped to [0, π].
inline Grid1D build_grid(int N) {
  if (N < 8) throw ConfigError("build_grid: N must be at least 8 (got " + std::to_string(N) + ")");
  const int n = N - 1;
  Eigen::VectorXd xi(N), c(N);
  for (int j = 0; j < N; ++j) {
    xi(j) = std::cos(std::numbers::pi * j / n);
    c(j) = ((j == 0 || j == n) ? 2.0 : 1.0) * (j % 2 == 0 ? 1.0 : -1.0);
  }
  Eigen::MatrixXd D(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      D(i, j) = i == j ? 0.0 : (c(i) / c(j)) / (xi(i) - xi(j));
    }
  }
  // Negative-sum trick for the diagonal.
  for (int i = 0; i < N; ++i) D(i, i) = -D.row(i).sum();

  Grid1D g;
  g.N = N;
  // x = π(1 − ξ)/2 puts the nodes in ascending order.
  g.x = std::numbers::pi * (1.0 - xi.array()) / 2.0;
  g.D1 = D * (-2.0 / std::numbers::pi);
  g.D2 = g.D1 * g.D1;
  g.weights = detail::clenshaw_curtis(N) * (std::numbers::pi / 2.0);

  const int K = N - 2;
  Eigen::Matrix2d dbb;
  dbb << g.D1(0, 0), g.D1(0, n), g.D1(n, 0), g.D1(n, n);
  Eigen::MatrixXd dbi(2, K);
  dbi.row(0) = g.D1.row(0).segment(1, K);
  dbi.row(1) = g.D1.row(n).segment(1, K);
  g.M = -dbb.inverse() * dbi;
  Eigen::MatrixXd d2ib(K, 2);
  d2ib.col(0) = g.D2.col(0).segment(1, K);
  d2ib.col(1) = g.D2.col(n).segment(1, K);
  g.L = g.D2.block(1, 1, K, K) + d2ib * g.M;
  return g;
}

struct FieldState1D {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd r;
  double t = 0.0;

  double min_value() const { return std::min({u.minCoeff(), v.minCoeff(), r.minCoeff()}); }
  bool finite() const { return u.allFinite() && v.allFinite() && r.allFinite(); }
};

/// E8 + ε_i cos²(n x) in each field.
inline FieldState1D init_perturbation(const StatePoint& eq, const std::array<double, 3>& eps, int n,
                                      const Grid1D& grid) {
  for (double e : eps) {
    if (!(e >= 0.0)) throw DomainError("init_perturbation: amplitudes must be nonnegative");
  }
  const Eigen::ArrayXd shape = (n * grid.x.array()).cos().square();
  FieldState1D s;
  s.u = (eq.u + eps[0] * shape).matrix();
  s.v = (eq.v + eps[1] * shape).matrix();
  s.r = (eq.r + eps[2] * shape).matrix();
  return s;
}

/// Replace the two end values of a field so that D1·f vanishes there.
inline void enforce_neumann(Eigen::VectorXd& f, const Grid1D& grid) {
  const int K = grid.interior();
  const Eigen::Vector2d b = grid.M * f.segment(1, K);
  f(0) = b(0);
  f(grid.N - 1) = b(1);
}

inline FieldState1D enforce_neumann(FieldState1D s, const Grid1D& grid) {
  enforce_neumann(s.u, grid);
  enforce_neumann(s.v, grid);
  enforce_neumann(s.r, grid);
  return s;
}

// ---------------------------------------------------------------------------
// Generic embedded Runge–Kutta (Dormand–Prince 5(4)).

struct Dopri5Options {
  double rtol = 1e-6;
  double atol = 1e-8;
  double h0 = 1e-3;
  double hmin = 1e-14;
  long max_steps = 10'000'000;
};

struct Dopri5Stats {
  long accepted = 0;
  long rejected = 0;
  double last_h = 0.0;
};

/// Integrates y' = f(t, y) from t0 to t1 in place. `rhs(t, y, dy)` writes dy.
template <class Rhs, class Vec>
Dopri5Stats dopri5(Rhs&& rhs, Vec& y, double t0, double t1, const Dopri5Options& opt = {}) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Dopri5Stats st;
  if (t1 <= t0) return st;
  double t = t0;
  double h = std::min(opt.h0, t1 - t0);
  Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y, err = y;
  rhs(t, y, k1);
  while (t < t1) {
    if (st.accepted + st.rejected > opt.max_steps) throw SolverError("dopri5: step budget exhausted");
    if (h < opt.hmin) throw SolverError("dopri5: step size underflow");
    const bool last = t + h >= t1;
    if (last) h = t1 - t;
    ytmp = y + h * (a21 * k1);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double q = err[i] / sc;
      acc += q * q;
    }
    const double enorm = std::sqrt(acc / double(y.size()));
    if (!std::isfinite(enorm)) {
      h *= 0.2;
      ++st.rejected;
      continue;
    }
    if (enorm <= 1.0) {
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;
      ++st.accepted;
      st.last_h = h;
    } else {
      ++st.rejected;
    }
    const double fac = enorm > 0.0 ? 0.9 * std::pow(enorm, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  return st;
}

// ---------------------------------------------------------------------------

enum class Integrator1D { Imex, Rk45 };

struct Run1DConfig {
  int N = 256;
  int n = 8;  ///< perturbation wavenumber
  std::array<double, 3> eps{0.05, 0.05, 0.05};
  double t_end = 2000.0;
  double dt = 0.05;               ///< IMEX step
  double snapshot_every = 100.0;  ///< time between stored snapshots
  Integrator1D integrator = Integrator1D::Imex;
  double rtol = 1e-6;
  double atol = 1e-8;
  bool with_reaction = true;
  double negativity_tol = 1e-12;
};

struct Run1DResult {
  Grid1D grid;
  std::vector<FieldState1D> snapshots;  ///< includes t = 0 and the final state
  double min_value = 0.0;               ///< smallest field value over all steps
  bool negativity_flag = false;
  long steps = 0;

  const FieldState1D& final_state() const { return snapshots.back(); }
};

namespace detail {

struct Interior3 {
  Eigen::VectorXd u, v, r;
};

inline void reaction_fields(const Interior3& s, const Params& p, bool on, Interior3& f) {
  const Eigen::Index K = s.u.size();
  f.u.resize(K);
  f.v.resize(K);
  f.r.resize(K);
  if (!on) {
    f.u.setZero();
    f.v.setZero();
    f.r.setZero();
    return;
  }
  for (Eigen::Index i = 0; i < K; ++i) {
    const Rates q = reaction_unchecked(s.u(i), s.v(i), s.r(i), p);
    f.u(i) = q.fu;
    f.v(i) = q.fv;
    f.r(i) = q.fr;
  }
}

inline FieldState1D expand(const Interior3& s, const Grid1D& g, double t) {
  const int K = g.interior();
  auto full = [&](const Eigen::VectorXd& in) {
    Eigen::VectorXd f(g.N);
    f.segment(1, K) = in;
    const Eigen::Vector2d b = g.M * in;
    f(0) = b(0);
    f(g.N - 1) = b(1);
    return f;
  };
  return {full(s.u), full(s.v), full(s.r), t};
}

inline Interior3 restrict(const FieldState1D& s, const Grid1D& g) {
  const int K = g.interior();
  return {s.u.segment(1, K), s.v.segment(1, K), s.r.segment(1, K)};
}

inline void check_state(const FieldState1D& s, Run1DResult& out, double tol) {
  if (!s.finite()) {
    throw SolverError("run1d: non-finite value at t = " + std::to_string(s.t));
  }
  const double lo = s.min_value();
  out.min_value = std::min(out.min_value, lo);
  if (lo < -tol) out.negativity_flag = true;
}

}  // namespace detail

/// Integrate from a given initial state. Snapshots every `snapshot_every`.
inline Run1DResult run1d(const Params& p, const FieldState1D& initial, const Run1DConfig& cfg) {
  if (!(cfg.t_end > 0.0)) throw ConfigError("run1d: t_end must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("run1d: dt must be positive");
  if (!(cfg.snapshot_every > 0.0)) throw ConfigError("run1d: snapshot_every must be positive");
  validate(p);
  Run1DResult out;
  out.grid = build_grid(cfg.N);
  const Grid1D& g = out.grid;
  if (initial.u.size() != g.N || initial.v.size() != g.N || initial.r.size() != g.N) {
    throw ConfigError("run1d: initial state does not match grid size");
  }
  const int K = g.interior();
  const std::array<double, 3> d{p.d1, p.d2, p.d3};

  detail::Interior3 cur = detail::restrict(initial, g);
  out.snapshots.push_back(detail::expand(cur, g, 0.0));
  out.min_value = std::numeric_limits<double>::infinity();
  detail::check_state(out.snapshots.back(), out, cfg.negativity_tol);

  const long n_snap = std::max(1L, std::lround(cfg.t_end / cfg.snapshot_every));
  const double snap_dt = cfg.t_end / double(n_snap);

  if (cfg.integrator == Integrator1D::Imex) {
    // SBDF2: (3I − 2Δt d L) u⁺ = 4u − u⁻ + 2Δt (2f − f⁻), started by one IMEX Euler step.
    const long steps_per_snap = std::max(1L, std::lround(snap_dt / cfg.dt));
    const double h = snap_dt / double(steps_per_snap);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
    std::array<Eigen::PartialPivLU<Eigen::MatrixXd>, 3> euler, bdf2;
    for (int i = 0; i < 3; ++i) {
      euler[i].compute(I - h * d[i] * g.L);
      bdf2[i].compute(3.0 * I - 2.0 * h * d[i] * g.L);
    }
    detail::Interior3 prev, f_cur, f_prev;
    detail::reaction_fields(cur, p, cfg.with_reaction, f_cur);
    prev = cur;
    f_prev = f_cur;
    cur = {euler[0].solve(cur.u + h * f_cur.u), euler[1].solve(cur.v + h * f_cur.v),
           euler[2].solve(cur.r + h * f_cur.r)};
    long step = 1;
    const long total = steps_per_snap * n_snap;
    for (long s = 1; s <= n_snap; ++s) {
      for (; step < s * steps_per_snap; ++step) {
        detail::reaction_fields(cur, p, cfg.with_reaction, f_cur);
        detail::Interior3 next{
            bdf2[0].solve(4.0 * cur.u - prev.u + 2.0 * h * (2.0 * f_cur.u - f_prev.u)),
            bdf2[1].solve(4.0 * cur.v - prev.v + 2.0 * h * (2.0 * f_cur.v - f_prev.v)),
            bdf2[2].solve(4.0 * cur.r - prev.r + 2.0 * h * (2.0 * f_cur.r - f_prev.r))};
        prev = std::move(cur);
        cur = std::move(next);
        std::swap(f_prev, f_cur);
        if (!cur.u.allFinite() || !cur.v.allFinite() || !cur.r.allFinite()) {
          throw SolverError("run1d: non-finite value at t = " + std::to_string((step + 1) * h));
        }
        const double lo = std::min({cur.u.minCoeff(), cur.v.minCoeff(), cur.r.minCoeff()});
        out.min_value = std::min(out.min_value, lo);
        if (lo < -cfg.negativity_tol) out.negativity_flag = true;
      }
      out.snapshots.push_back(detail::expand(cur, g, s * snap_dt));
      detail::check_state(out.snapshots.back(), out, cfg.negativity_tol);
    }
    out.steps = total;
  } else {
    Eigen::VectorXd y(3 * K);
    y << cur.u, cur.v, cur.r;
    auto rhs = [&](double, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
      detail::Interior3 s{yy.segment(0, K), yy.segment(K, K), yy.segment(2 * K, K)};
      detail::Interior3 f;
      detail::reaction_fields(s, p, cfg.with_reaction, f);
      dy.resize(3 * K);
      dy.segment(0, K) = d[0] * (g.L * s.u) + f.u;
      dy.segment(K, K) = d[1] * (g.L * s.v) + f.v;
      dy.segment(2 * K, K) = d[2] * (g.L * s.r) + f.r;
    };
    Dopri5Options opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    opt.h0 = cfg.dt;
    for (long s = 1; s <= n_snap; ++s) {
      const Dopri5Stats st = dopri5(rhs, y, (s - 1) * snap_dt, s * snap_dt, opt);
      opt.h0 = st.last_h > 0.0 ? st.last_h : opt.h0;
      out.steps += st.accepted;
      cur = {y.segment(0, K), y.segment(K, K), y.segment(2 * K, K)};
      out.snapshots.push_back(detail::expand(cur, g, s * snap_dt));
      detail::check_state(out.snapshots.back(), out, cfg.negativity_tol);
    }
  }
  return out;
}

/// Integrate from E8-type data: `eq` plus the cos² perturbation.
inline Run1DResult run1d(const Params& p, const StatePoint& eq, const Run1DConfig& cfg) {
  const Grid1D g = build_grid(cfg.N);
  return run1d(p, init_perturbation(eq, cfg.eps, cfg.n, g), cfg);
}

}  // namespace foodchain
