#pragma once

// Norms, regression, pattern classification and the two experiment drivers
// (decay of the pattern with m, overexploitation scenarios).

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "foodchain/equilibria.hpp"
#include "foodchain/error.hpp"
#include "foodchain/model.hpp"
#include "foodchain/solver1d.hpp"
#include "foodchain/solver2d.hpp"

namespace foodchain {

// ---------------------------------------------------------------------------
// Norms. The L² norm carries the 1/|Ω| factor, so a constant c has norm |c|.

struct NormReport {
  double l2 = 0.0;
  double sup = 0.0;
  double h1 = 0.0;
};

inline NormReport norms(const Eigen::VectorXd& f, const Grid1D& g) {
  if (f.size() != g.N) throw DomainError("norms: field does not match grid");
  const double inv = 1.0 / g.length();
  const Eigen::VectorXd df = g.D1 * f;
  const double l2sq = inv * g.weights.dot(f.cwiseProduct(f));
  const double gradsq = inv * g.weights.dot(df.cwiseProduct(df));
  return {std::sqrt(std::max(l2sq, 0.0)), f.cwiseAbs().maxCoeff(),
          std::sqrt(std::max(l2sq + gradsq, 0.0))};
}

namespace detail {

// Centred differences with the mirrored ghost values used by the 2D scheme.
inline double gradient_sq_sum(const Field2D& f, const Grid2D& g) {
  const int nx = static_cast<int>(f.rows()), ny = static_cast<int>(f.cols());
  double acc = 0.0;
  for (int j = 0; j < ny; ++j) {
    const int jm = j > 0 ? j - 1 : 0, jp = j < ny - 1 ? j + 1 : ny - 1;
    for (int i = 0; i < nx; ++i) {
      const int im = i > 0 ? i - 1 : 0, ip = i < nx - 1 ? i + 1 : nx - 1;
      const double fx = (f(ip, j) - f(im, j)) / (2.0 * g.dx);
      const double fy = (f(i, jp) - f(i, jm)) / (2.0 * g.dy);
      acc += fx * fx + fy * fy;
    }
  }
  return acc;
}

}  // namespace detail

/// Midpoint quadrature on the cell-centred mesh.
inline NormReport norms(const Field2D& f, const Grid2D& g) {
  if (f.rows() != g.nx || f.cols() != g.ny) throw DomainError("norms: field does not match grid");
  const double cell = g.dx * g.dy / g.area();
  const double l2sq = cell * f.square().sum();
  const double gradsq = cell * detail::gradient_sq_sum(f, g);
  return {std::sqrt(l2sq), f.abs().maxCoeff(), std::sqrt(l2sq + gradsq)};
}

struct StateNorms {
  NormReport u, v, r;
};

inline StateNorms norms(const FieldState1D& s, const Grid1D& g) {
  return {norms(s.u, g), norms(s.v, g), norms(s.r, g)};
}

inline StateNorms norms(const FieldState2D& s, const Grid2D& g) {
  return {norms(s.u, g), norms(s.v, g), norms(s.r, g)};
}

/// Per-field H¹ norms of a − b.
struct H1Error {
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;
  /// H¹ norm of the vector difference, sqrt(u² + v² + r²).
  double combined() const { return std::sqrt(u * u + v * v + r * r); }
};

inline H1Error h1_error(const FieldState1D& a, const FieldState1D& b, const Grid1D& g) {
  if (a.u.size() != b.u.size() || a.v.size() != b.v.size() || a.r.size() != b.r.size() ||
      a.u.size() != g.N) {
    throw DomainError("h1_error: states live on different grids");
  }
  return {norms(Eigen::VectorXd(a.u - b.u), g).h1, norms(Eigen::VectorXd(a.v - b.v), g).h1,
          norms(Eigen::VectorXd(a.r - b.r), g).h1};
}

inline H1Error h1_error(const FieldState2D& a, const FieldState2D& b, const Grid2D& g) {
  if (a.u.rows() != b.u.rows() || a.u.cols() != b.u.cols() || a.u.rows() != g.nx ||
      a.u.cols() != g.ny) {
    throw DomainError("h1_error: states live on different grids");
  }
  return {norms(Field2D(a.u - b.u), g).h1, norms(Field2D(a.v - b.v), g).h1,
          norms(Field2D(a.r - b.r), g).h1};
}

// ---------------------------------------------------------------------------
// Least squares with t-based 95% intervals.

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
  std::array<double, 2> ci95_slope{};
  std::array<double, 2> ci95_intercept{};
  double se_slope = 0.0;
  double se_intercept = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> excluded;  ///< input indices dropped (log branch only)
};

inline FitResult linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("linear_fit: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DomainError("linear_fit: at least 3 points are required");
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= double(n);
  ym /= double(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xm, dy = y[i] - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DomainError("linear_fit: x values are all equal");
  FitResult f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  f.correlation = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  const double dof = double(n) - 2.0;
  const double s2 = sse / dof;
  f.se_slope = std::sqrt(s2 / sxx);
  f.se_intercept = std::sqrt(s2 * (1.0 / double(n) + xm * xm / sxx));
  const boost::math::students_t dist(dof);
  const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
  f.ci95_slope = {f.slope - tq * f.se_slope, f.slope + tq * f.se_slope};
  f.ci95_intercept = {f.intercept - tq * f.se_intercept, f.intercept + tq * f.se_intercept};
  return f;
}

/// Fit of log y against log x (natural logs). Points with x ≤ 0 or y ≤ 0 are
/// dropped and listed in `excluded`.
inline FitResult loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("loglog_fit: x and y differ in length");
  std::vector<double> lx, ly;
  std::vector<std::size_t> excluded;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    } else {
      excluded.push_back(i);
    }
  }
  FitResult f = linear_fit(lx, ly);
  f.excluded = std::move(excluded);
  return f;
}

// ---------------------------------------------------------------------------
// Pattern classification.

enum class PatternClass { Homogeneous, FixedPattern, SpatioTemporal };

inline const char* name(PatternClass c) {
  switch (c) {
    case PatternClass::Homogeneous: return "homogeneous";
    case PatternClass::FixedPattern: return "fixed-pattern";
    default: return "spatio-temporal";
  }
}

struct PatternThresholds {
  double homogeneous_rel = 1e-6;  ///< spatial std relative to the mean scale
  double steady_rel = 1e-6;       ///< relative L² change between the last two snapshots
};

namespace detail {

template <class F>
Eigen::Map<const Eigen::VectorXd> flat(const F& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

template <class F>
double spatial_std(const F& f) {
  const auto v = flat(f);
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

}  // namespace detail

/// Population standard deviation of a field over the mesh nodes.
template <class F>
double spatial_std(const F& f) {
  return detail::spatial_std(f);
}

/// Relative change ‖b − a‖/‖b‖ over all three fields (node-wise Euclidean).
template <class State>
double relative_change(const State& a, const State& b) {
  double num = 0.0, den = 0.0;
  auto acc = [&](const auto& fa, const auto& fb) {
    num += (detail::flat(fb) - detail::flat(fa)).squaredNorm();
    den += detail::flat(fb).squaredNorm();
  };
  acc(a.u, b.u);
  acc(a.v, b.v);
  acc(a.r, b.r);
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

template <class State>
PatternClass classify_pattern(std::span<const State> snaps, const PatternThresholds& th = {}) {
  if (snaps.size() < 2) throw DomainError("classify_pattern: need at least two snapshots");
  const State& last = snaps.back();
  const State& prev = snaps[snaps.size() - 2];
  const double scale = std::max({std::abs(detail::flat(last.u).mean()),
                                 std::abs(detail::flat(last.v).mean()),
                                 std::abs(detail::flat(last.r).mean()),
                                 std::numeric_limits<double>::min()});
  const double sd = std::max({spatial_std(last.u), spatial_std(last.v), spatial_std(last.r)});
  if (sd < th.homogeneous_rel * scale) return PatternClass::Homogeneous;
  if (relative_change(prev, last) < th.steady_rel) return PatternClass::FixedPattern;
  return PatternClass::SpatioTemporal;
}

template <class State>
PatternClass classify_pattern(const std::vector<State>& snaps, const PatternThresholds& th = {}) {
  return classify_pattern(std::span<const State>(snaps), th);
}

// ---------------------------------------------------------------------------
// Minimal fan-out over independent jobs. Exceptions are rethrown after join.

template <class Job>
void parallel_for(std::size_t count, int threads, Job&& job) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::size_t(std::max(threads, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Decay experiment: distance of the m-pattern from the m = 0 pattern.

struct DecayRecord {
  double m = 0.0;
  H1Error error;
  PatternClass pattern = PatternClass::SpatioTemporal;
  double final_change = 0.0;  ///< relative change over the last snapshot interval
  bool included = true;
};

struct DecayResult {
  std::vector<DecayRecord> records;
  FitResult raw;     ///< combined error vs m, included runs
  FitResult loglog;  ///< log combined error vs log m, m > 0
  std::array<FitResult, 3> loglog_fields;  ///< u, v, r separately
  std::vector<std::string> notes;
  FieldState1D reference;
};

/// Evenly spaced values lo, ..., hi.
inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2) throw ConfigError("linspace: count must be at least 2");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * double(i) / double(count - 1);
  out.back() = hi;
  return out;
}

inline DecayResult decay_experiment(const Params& base, std::span<const double> m_values,
                                    const Run1DConfig& cfg, int threads = 1,
                                    const PatternThresholds& th = {}) {
  validate(base);
  auto zero = std::find(m_values.begin(), m_values.end(), 0.0);
  if (zero == m_values.end()) throw ConfigError("decay: the m list must contain 0");
  const std::size_t n = m_values.size();
  const Equilibrium e8 = interior_equilibrium(base);
  if (!e8.exists) throw ConfigError("decay: base parameters have no interior equilibrium");

  std::vector<Run1DResult> runs(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Params p = base;
    p.m = m_values[i];
    validate(p);
    runs[i] = run1d(p, e8.point, cfg);
  });

  DecayResult out;
  const std::size_t ref = std::size_t(zero - m_values.begin());
  const Grid1D& g = runs[ref].grid;
  out.reference = runs[ref].final_state();
  if (classify_pattern(runs[ref].snapshots, th) != PatternClass::FixedPattern) {
    throw SolverError("decay: the m = 0 reference run did not reach a fixed pattern");
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    DecayRecord rec;
    rec.m = m_values[i];
    const auto& s = runs[i].snapshots;
    rec.pattern = classify_pattern(s, th);
    rec.final_change = relative_change(s[s.size() - 2], s.back());
    rec.error = h1_error(runs[i].final_state(), out.reference, g);
    if (rec.pattern != PatternClass::FixedPattern) {
      rec.included = false;
      out.notes.push_back("m = " + std::to_string(rec.m) + " excluded: " + name(rec.pattern));
    }
    if (runs[i].negativity_flag) {
      out.notes.push_back("m = " + std::to_string(rec.m) + ": negative values during run");
    }
    if (rec.included) {
      xs.push_back(rec.m);
      ys.push_back(rec.error.combined());
    }
    out.records.push_back(rec);
  }
  out.raw = linear_fit(xs, ys);
  out.loglog = loglog_fit(xs, ys);
  for (int f = 0; f < 3; ++f) {
    std::vector<double> yf;
    for (const DecayRecord& r : out.records) {
      if (r.included) yf.push_back(f == 0 ? r.error.u : f == 1 ? r.error.v : r.error.r);
    }
    out.loglog_fields[f] = loglog_fit(xs, yf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Overexploitation scenarios.

enum class ScenarioKind { TotalExtinction, PreyRecovery, Persistence };

inline const char* name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::TotalExtinction: return "total-extinction";
    case ScenarioKind::PreyRecovery: return "prey-recovery";
    default: return "persistence";
  }
}

/// Initial data base_i·(1 + amp_i·cos(n x)) on the 1D grid.
struct ScenarioInit {
  StatePoint base;
  std::array<double, 3> amp{0.0, 0.0, 0.0};
  int n = 1;
};

struct ScenarioTolerances {
  double extinct = 1e-6;
  double close = 1e-3;
};

struct ScenarioOutcome {
  ScenarioKind requested = ScenarioKind::Persistence;
  bool hypotheses_ok = false;
  std::vector<std::string> failed_hypotheses;
  std::optional<ScenarioKind> observed;  ///< empty if no criterion is met at t_end
  StatePoint final_mean;                 ///< spatial means at t_end
  StatePoint final_sup;
  double final_min_r = 0.0;
  double target_r = 0.0;  ///< max(m, cD3/w4)
  std::optional<double> time_to_threshold;
  bool negativity_flag = false;
};

inline FieldState1D scenario_state(const ScenarioInit& init, const Grid1D& g) {
  for (double a : init.amp) {
    if (!(std::abs(a) <= 1.0)) throw ConfigError("scenario: amplitudes must lie in [-1, 1]");
  }
  if (init.base.u < 0.0 || init.base.v < 0.0 || init.base.r < 0.0) {
    throw ConfigError("scenario: initial densities must be nonnegative");
  }
  const Eigen::ArrayXd c = (init.n * g.x.array()).cos();
  return {(init.base.u * (1.0 + init.amp[0] * c)).matrix(),
          (init.base.v * (1.0 + init.amp[1] * c)).matrix(),
          (init.base.r * (1.0 + init.amp[2] * c)).matrix(), 0.0};
}

namespace detail {

inline void require(bool ok, const std::string& what, std::vector<std::string>& failed) {
  if (!ok) failed.push_back(what);
}

inline bool meets(ScenarioKind k, const FieldState1D& s, const Params& p, double target,
                  const ScenarioTolerances& tol) {
  const double su = s.u.cwiseAbs().maxCoeff(), sv = s.v.cwiseAbs().maxCoeff(),
               sr = s.r.cwiseAbs().maxCoeff();
  (void)p;
  switch (k) {
    case ScenarioKind::TotalExtinction:
      return su < tol.extinct && sv < tol.extinct && sr < tol.extinct;
    case ScenarioKind::PreyRecovery:
      return (s.u.array() - 1.0).abs().maxCoeff() < tol.close && sv < tol.extinct &&
             (s.r.array() - target).abs().maxCoeff() < tol.close;
    default:
      return (s.r.array() - target).abs().maxCoeff() < tol.close;
  }
}

}  // namespace detail

/// Checks the hypotheses of the requested scenario (sup norms), integrates the
/// PDE and classifies the end state.
inline ScenarioOutcome overexploitation_scenario(ScenarioKind kind, const Params& p,
                                                 const ScenarioInit& init, const Run1DConfig& cfg,
                                                 const ScenarioTolerances& tol = {}) {
  validate(p);
  ScenarioOutcome out;
  out.requested = kind;
  const double cap = p.top_capacity();
  out.target_r = std::max(p.m, cap);

  const Grid1D g = build_grid(cfg.N);
  const FieldState1D s0 = scenario_state(init, g);
  const double u0 = s0.u.cwiseAbs().maxCoeff(), v0 = s0.v.cwiseAbs().maxCoeff(),
               r0 = s0.r.cwiseAbs().maxCoeff();
  auto fmt = [](double x) { return std::to_string(x); };
  switch (kind) {
    case ScenarioKind::TotalExtinction: {
      const double sum = p.a2 + 1.0 + p.w3;
      detail::require(p.w1 > sum, "w1 > a2 + 1 + w3 (" + fmt(p.w1) + " vs " + fmt(sum) + ")",
                      out.failed_hypotheses);
      // w1/(1 + alpha) = 1 + a2 + w3, M1 = ||u0||/alpha.
      const double alpha = p.w1 / sum - 1.0;
      if (alpha > 0.0) {
        detail::require(u0 / alpha < v0, "M1 = ||u0||/alpha < ||v0|| (" + fmt(u0 / alpha) +
                                             " vs " + fmt(v0) + ")",
                        out.failed_hypotheses);
      }
      detail::require(r0 < std::min(p.m, cap), "||r0|| < min(m, cD3/w4) (" + fmt(r0) + " vs " +
                                                   fmt(std::min(p.m, cap)) + ")",
                      out.failed_hypotheses);
      break;
    }
    case ScenarioKind::PreyRecovery: {
      const double sum = p.w2 + 1.0 + p.w1;
      detail::require(p.w3 > sum, "w3 > w2 + 1 + w1 (" + fmt(p.w3) + " vs " + fmt(sum) + ")",
                      out.failed_hypotheses);
      // w3/(1 + alpha1) = 1 + w2 + w1, M2 = ||v0||/alpha1.
      const double alpha1 = p.w3 / sum - 1.0;
      if (alpha1 > 0.0) {
        const double bound = std::max({v0 / alpha1, p.m, cap});
        detail::require(bound < r0, "max(||v0||/alpha1, m, cD3/w4) < ||r0|| (" + fmt(bound) +
                                        " vs " + fmt(r0) + ")",
                        out.failed_hypotheses);
      }
      break;
    }
    case ScenarioKind::Persistence: {
      const double lo = std::min(p.m, cap);
      const double r_min = s0.r.minCoeff();
      detail::require(lo < r_min, "min(m, cD3/w4) < min r0 (" + fmt(lo) + " vs " + fmt(r_min) +
                                      ")",
                      out.failed_hypotheses);
      break;
    }
  }
  out.hypotheses_ok = out.failed_hypotheses.empty();

  const Run1DResult run = run1d(p, s0, cfg);
  out.negativity_flag = run.negativity_flag;
  for (const FieldState1D& s : run.snapshots) {
    if (detail::meets(kind, s, p, out.target_r, tol)) {
      out.time_to_threshold = s.t;
      break;
    }
  }
  const FieldState1D& fin = run.final_state();
  const double len = g.length();
  out.final_mean = {g.weights.dot(fin.u) / len, g.weights.dot(fin.v) / len,
                    g.weights.dot(fin.r) / len};
  out.final_sup = {fin.u.cwiseAbs().maxCoeff(), fin.v.cwiseAbs().maxCoeff(),
                   fin.r.cwiseAbs().maxCoeff()};
  out.final_min_r = fin.r.minCoeff();
  for (ScenarioKind k :
       {ScenarioKind::TotalExtinction, ScenarioKind::PreyRecovery, ScenarioKind::Persistence}) {
    if (detail::meets(k, fin, p, out.target_r, tol)) {
      out.observed = k;
      break;
    }
  }
  return out;
}

}  // namespace foodchain
