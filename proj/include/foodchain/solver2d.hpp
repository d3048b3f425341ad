#pragma once

// Explicit 2D scheme: forward Euler in time, five-point Laplacian on a
// uniform cell-centred mesh with mirrored ghost cells (zero flux).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "foodchain/error.hpp"
#include "foodchain/model.hpp"

namespace foodchain {

using Field2D = Eigen::ArrayXXd;  ///< (nx, ny); node (i, j) sits at ((i+½)dx, (j+½)dy)

struct Grid2D {
  int nx = 200;
  int ny = 200;
  double dx = 0.1;
  double dy = 0.1;
  double dt = 0.1;

  double area() const { return nx * dx * ny * dy; }
  double x(int i) const { return (i + 0.5) * dx; }
  double y(int j) const { return (j + 0.5) * dy; }
};

/// max(d)·dt·(1/dx² + 1/dy²), required to be ≤ 1/2.
inline double cfl_number(const Grid2D& g, double dmax) {
  return dmax * g.dt * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy));
}

/// Largest stable dt for the given diffusivity.
inline double max_stable_dt(const Grid2D& g, double dmax) {
  return 0.5 / (dmax * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy)));
}

inline Grid2D make_grid2d(int nx, int ny, double dx, double dy, double dt, double dmax) {
  if (nx < 2 || ny < 2) throw ConfigError("grid2d: nx and ny must be at least 2");
  if (!(dx > 0.0) || !(dy > 0.0) || !(dt > 0.0)) {
    throw ConfigError("grid2d: dx, dy and dt must be positive");
  }
  Grid2D g{nx, ny, dx, dy, dt};
  if (dmax > 0.0 && cfl_number(g, dmax) > 0.5) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "grid2d: dt = %.6g violates the stability bound dt <= %.6g", dt,
                  max_stable_dt(g, dmax));
    throw ConfigError(buf);
  }
  return g;
}

/// Five-point Laplacian with ghost values f[-1] = f[0], f[n] = f[n-1].
inline void laplacian_5pt(const Field2D& f, const Grid2D& g, Field2D& out) {
  const int nx = static_cast<int>(f.rows());
  const int ny = static_cast<int>(f.cols());
  out.resize(nx, ny);
  const double ix2 = 1.0 / (g.dx * g.dx);
  const double iy2 = 1.0 / (g.dy * g.dy);
  for (int j = 0; j < ny; ++j) {
    const int jm = j > 0 ? j - 1 : 0;
    const int jp = j < ny - 1 ? j + 1 : ny - 1;
    for (int i = 0; i < nx; ++i) {
      const int im = i > 0 ? i - 1 : 0;
      const int ip = i < nx - 1 ? i + 1 : nx - 1;
      const double c = f(i, j);
      out(i, j) = (f(im, j) + f(ip, j) - 2.0 * c) * ix2 + (f(i, jm) + f(i, jp) - 2.0 * c) * iy2;
    }
  }
}

inline Field2D laplacian_5pt(const Field2D& f, const Grid2D& g) {
  Field2D out;
  laplacian_5pt(f, g, out);
  return out;
}

struct FieldState2D {
  Field2D u;
  Field2D v;
  Field2D r;
  double t = 0.0;

  double min_value() const { return std::min({u.minCoeff(), v.minCoeff(), r.minCoeff()}); }
  bool finite() const { return u.allFinite() && v.allFinite() && r.allFinite(); }
};

inline FieldState2D homogeneous_state(const StatePoint& s, const Grid2D& g) {
  return {Field2D::Constant(g.nx, g.ny, s.u), Field2D::Constant(g.nx, g.ny, s.v),
          Field2D::Constant(g.nx, g.ny, s.r), 0.0};
}

namespace detail {

inline void need_nonnegative_diffusion(const Params& p) {
  validate_kinetics(p);
  for (double d : {p.d1, p.d2, p.d3}) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("diffusivities must be nonnegative");
  }
}

}  // namespace detail

/// Reusable buffers for step2d.
struct Step2DWork {
  Field2D lu, lv, lr;
};

/// One forward-Euler step, writing into `next` (must not alias `cur`).
inline void step2d(const FieldState2D& cur, const Params& p, const Grid2D& g, FieldState2D& next,
                   Step2DWork& work) {
  laplacian_5pt(cur.u, g, work.lu);
  laplacian_5pt(cur.v, g, work.lv);
  laplacian_5pt(cur.r, g, work.lr);
  next.u.resize(g.nx, g.ny);
  next.v.resize(g.nx, g.ny);
  next.r.resize(g.nx, g.ny);
  const double dt = g.dt;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Rates q = reaction_unchecked(cur.u(i, j), cur.v(i, j), cur.r(i, j), p);
      next.u(i, j) = cur.u(i, j) + dt * (p.d1 * work.lu(i, j) + q.fu);
      next.v(i, j) = cur.v(i, j) + dt * (p.d2 * work.lv(i, j) + q.fv);
      next.r(i, j) = cur.r(i, j) + dt * (p.d3 * work.lr(i, j) + q.fr);
    }
  }
  next.t = cur.t + dt;
}

inline FieldState2D step2d(const FieldState2D& cur, const Params& p, const Grid2D& g) {
  detail::need_nonnegative_diffusion(p);
  if (cfl_number(g, std::max({p.d1, p.d2, p.d3})) > 0.5) {
    throw ConfigError("step2d: time step violates the stability bound");
  }
  FieldState2D next;
  Step2DWork work;
  step2d(cur, p, g, next, work);
  if (!next.finite()) throw SolverError("step2d: non-finite value");
  return next;
}

enum class Init2D { Random, Cosine };

struct Run2DConfig {
  Grid2D grid;
  double t_end = 1000.0;
  double snapshot_every = 100.0;
  Init2D init = Init2D::Random;
  double amplitude = 0.05;
  std::uint64_t seed = 1;
  int n = 8;  ///< wavenumber of the cos² option
  double negativity_tol = 1e-12;
};

struct Run2DResult {
  Grid2D grid;
  std::vector<FieldState2D> snapshots;  ///< t = 0, every snapshot_every, final
  double min_value = 0.0;
  bool negativity_flag = false;
  long steps = 0;

  const FieldState2D& final_state() const { return snapshots.back(); }
};

/// `eq` plus a one-sided uniform random perturbation in [0, amplitude) or
/// amplitude·cos²(n x) cos²(n y).
inline FieldState2D initial_state2d(const StatePoint& eq, const Run2DConfig& cfg) {
  if (!(cfg.amplitude >= 0.0)) throw ConfigError("initial_state2d: amplitude must be nonnegative");
  const Grid2D& g = cfg.grid;
  FieldState2D s = homogeneous_state(eq, g);
  if (cfg.init == Init2D::Random) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (Field2D* f : {&s.u, &s.v, &s.r}) {
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) (*f)(i, j) += cfg.amplitude * dist(rng);
    }
  } else {
    for (int j = 0; j < g.ny; ++j) {
      const double cy = std::cos(cfg.n * g.y(j));
      for (int i = 0; i < g.nx; ++i) {
        const double cx = std::cos(cfg.n * g.x(i));
        const double bump = cfg.amplitude * cx * cx * cy * cy;
        s.u(i, j) += bump;
        s.v(i, j) += bump;
        s.r(i, j) += bump;
      }
    }
  }
  return s;
}

inline Run2DResult run2d(const Params& p, const FieldState2D& initial, const Run2DConfig& cfg) {
  detail::need_nonnegative_diffusion(p);
  if (!(cfg.t_end > 0.0)) throw ConfigError("run2d: t_end must be positive");
  if (!(cfg.snapshot_every > 0.0)) throw ConfigError("run2d: snapshot_every must be positive");
  const Grid2D g = make_grid2d(cfg.grid.nx, cfg.grid.ny, cfg.grid.dx, cfg.grid.dy, cfg.grid.dt,
                               std::max({p.d1, p.d2, p.d3}));
  if (initial.u.rows() != g.nx || initial.u.cols() != g.ny || initial.v.rows() != g.nx ||
      initial.v.cols() != g.ny || initial.r.rows() != g.nx || initial.r.cols() != g.ny) {
    throw ConfigError("run2d: initial state does not match grid size");
  }
  Run2DResult out;
  out.grid = g;
  out.snapshots.push_back(initial);
  out.snapshots.back().t = 0.0;
  out.min_value = initial.min_value();
  out.negativity_flag = out.min_value < -cfg.negativity_tol;

  const long total = std::max(1L, std::lround(cfg.t_end / g.dt));
  const long every = std::max(1L, std::lround(cfg.snapshot_every / g.dt));
  FieldState2D cur = initial, next;
  cur.t = 0.0;
  Step2DWork work;
  for (long s = 1; s <= total; ++s) {
    step2d(cur, p, g, next, work);
    std::swap(cur, next);
    cur.t = s * g.dt;
    const double lo = cur.min_value();
    if (!std::isfinite(lo) || !cur.finite()) {
      throw SolverError("run2d: non-finite value at t = " + std::to_string(cur.t));
    }
    out.min_value = std::min(out.min_value, lo);
    if (lo < -cfg.negativity_tol) out.negativity_flag = true;
    if (s % every == 0 || s == total) out.snapshots.push_back(cur);
  }
  out.steps = total;
  return out;
}

inline Run2DResult run2d(const Params& p, const StatePoint& eq, const Run2DConfig& cfg) {
  return run2d(p, initial_state2d(eq, cfg), cfg);
}

}  // namespace foodchain
