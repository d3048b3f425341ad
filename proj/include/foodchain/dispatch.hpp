#pragma once

// Runs one command and writes its artifacts into a fresh, run-indexed
// directory <out>/<command>-NNN.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "foodchain/analysis.hpp"
#include "foodchain/config.hpp"
#include "foodchain/equilibria.hpp"
#include "foodchain/solver1d.hpp"
#include "foodchain/solver2d.hpp"
#include "foodchain/turing.hpp"

namespace foodchain {

namespace fs = std::filesystem;

/// Next unused <base>/<command>-NNN.
inline fs::path next_run_dir(const fs::path& base, const std::string& command) {
  for (int i = 1; i < 100000; ++i) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03d", i);
    fs::path p = base / (command + "-" + idx);
    if (!fs::exists(p)) return p;
  }
  throw SolverError("no free run directory under " + base.string());
}

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SolverError("cannot write " + path.string());
  f << content;
  if (!f) throw SolverError("write failed: " + path.string());
}

inline std::string yes_no(bool b) { return b ? "true" : "false"; }

inline std::string sign_char(int s) { return s > 0 ? "+" : s < 0 ? "-" : "0"; }

inline std::string point_row(const StatePoint& s) {
  return fmt(s.u) + "," + fmt(s.v) + "," + fmt(s.r);
}

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

template <class Vec>
std::string matrix_text(const Vec& f, int rows, int cols) {
  std::string s;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j) s += ',';
      s += fmt(f(i, j));
    }
    s += '\n';
  }
  return s;
}

inline std::string snapshot_name(const char* stem, std::size_t k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, k, ext);
  return buf;
}

// --- equilibria -------------------------------------------------------------

inline void run_equilibria(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  std::string csv = "label,u,v,r,exists,note\n";
  for (const Equilibrium& e : all_equilibria(c.params)) {
    csv += e.label + "," + point_row(e.point) + "," + yes_no(e.exists) + "," + csv_field(e.note) + "\n";
    int k = 2;
    for (const StatePoint& alt : e.alternatives) {
      csv += e.label + "#" + std::to_string(k++) + "," + point_row(alt) + ",true,alternative root\n";
    }
    log << e.label << (e.exists ? " exists " : " absent ") << point_row(e.point)
        << (e.note.empty() ? "" : "  (" + e.note + ")") << "\n";
  }
  write_file(dir / "equilibria.csv", csv);
}

// --- turing -----------------------------------------------------------------

inline std::string verdict_text(const TuringVerdict& v) {
  std::ostringstream o;
  o << "equilibrium = " << point_row(v.equilibrium) << "\n";
  o << "stable_without_diffusion = " << yes_no(v.stable_without_diffusion) << "\n";
  o << "condition_DD_or_CC = " << yes_no(v.condition_DD_or_CC) << "\n";
  o << "gmin_negative = " << yes_no(v.gmin_negative) << "\n";
  o << "turing_unstable = " << yes_no(v.turing_unstable) << "\n";
  o << "turing_unstable_direct = " << yes_no(v.turing_unstable_direct) << "\n";
  o << "k2_T = " << (v.k2_T ? fmt(*v.k2_T) : std::string("none")) << "\n";
  o << "offending_function = " << (v.offending_function ? name(*v.offending_function) : "none") << "\n";
  o << "marginal = " << yes_no(v.marginal) << "\n";
  for (const GCheck& g : v.checks) {
    const std::string pre = std::string(name(g.g.which)) + ".";
    o << pre << "HH = " << fmt(g.g.HH) << "\n" << pre << "DD = " << fmt(g.g.DD) << "\n"
      << pre << "CC = " << fmt(g.g.CC) << "\n" << pre << "BB = " << fmt(g.g.BB) << "\n"
      << pre << "k2_T = " << (g.k2_T ? fmt(*g.k2_T) : std::string("none")) << "\n"
      << pre << "gmin = " << (g.gmin ? fmt(*g.gmin) : std::string("none")) << "\n"
      << pre << "gmin_direct = "
      << (g.k2_T ? fmt(g_min_direct(g.g, *g.k2_T)) : std::string("none")) << "\n"
      << pre << "gmin_formula_agrees = " << yes_no(g.gmin_formula_agrees) << "\n";
  }
  if (!v.note.empty()) o << "note = " << v.note << "\n";
  return o.str();
}

inline void run_turing(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const Params& p = c.params;
  const std::vector<TuringVerdict> verdicts = turing_verdicts(p);
  const Equilibrium e8 = interior_equilibrium(p);
  if (verdicts.empty()) {
    write_file(dir / "verdict.txt", "turing_unstable = false\nnote = no interior equilibrium: " + e8.note + "\n");
    log << "no interior equilibrium: " << e8.note << "\n";
    return;
  }
  std::vector<double> k2(c.dispersion.points);
  for (int i = 0; i < c.dispersion.points; ++i) {
    k2[i] = c.dispersion.k2_max * double(i) / double(c.dispersion.points - 1);
  }
  for (std::size_t idx = 0; idx < verdicts.size(); ++idx) {
    const TuringVerdict& v = verdicts[idx];
    const bool primary = v.equilibrium.u == e8.point.u;
    const std::string suffix = verdicts.size() == 1 ? "" : "_" + std::to_string(idx + 1);
    write_file(dir / ("verdict" + suffix + ".txt"),
               std::string("primary = ") + yes_no(primary) + "\n" + verdict_text(v));
    const Jacobian3 j = jacobian(v.equilibrium, p);
    const DispersionCubic disp = dispersion_cubic(j, DiffusionMatrix::from(p));
    const std::vector<double> g = growth_rates(j, DiffusionMatrix::from(p), k2);
    std::string csv = "k2,mu0,mu2mu1_minus_mu0,max_re_lambda\n";
    for (std::size_t i = 0; i < k2.size(); ++i) {
      csv += fmt(k2[i]) + "," + fmt(disp.mu0_at(k2[i])) + "," + fmt(disp.hurwitz_at(k2[i])) + "," +
             fmt(g[i]) + "\n";
    }
    write_file(dir / ("dispersion" + suffix + ".csv"), csv);
    log << "E8 " << point_row(v.equilibrium) << (primary ? " [primary]" : "")
        << ": turing_unstable = " << yes_no(v.turing_unstable)
        << ", turing_unstable_direct = " << yes_no(v.turing_unstable_direct)
        << ", stable_without_diffusion = " << yes_no(v.stable_without_diffusion) << "\n";
  }
}

inline void run_turing_table(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const std::vector<SignRow> rows = sign_table(c.params, c.m_values);
  std::string csv = "m,e8_exists,mu0,sign_mu0,mu2mu1_minus_mu0,sign_mu2mu1_minus_mu0,ode_stable,pattern\n";
  for (const SignRow& r : rows) {
    const char* pattern = r.stable ? "patterns may occur" : "no patterns";
    csv += fmt(r.m) + "," + yes_no(r.e8_exists) + "," + fmt(r.mu0) + "," + sign_char(r.sign_mu0) +
           "," + fmt(r.hurwitz) + "," + sign_char(r.sign_hurwitz) + "," + yes_no(r.stable) + "," +
           pattern + "\n";
    log << "m = " << fmt(r.m) << ": (" << sign_char(r.sign_mu0) << ", " << sign_char(r.sign_hurwitz)
        << ") " << pattern << "\n";
  }
  write_file(dir / "sign_table.csv", csv);
}

// --- simulations ------------------------------------------------------------

inline StatePoint primary_e8(const Params& p) {
  const Equilibrium e8 = interior_equilibrium(p);
  if (!e8.exists) throw ConfigError("no interior equilibrium to perturb: " + e8.note);
  return e8.point;
}

inline void run_sim1d(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const Run1DResult res = run1d(c.params, primary_e8(c.params), c.sim1d);
  const Grid1D& g = res.grid;
  fs::create_directories(dir / "snapshots");
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    const FieldState1D& s = res.snapshots[k];
    std::string txt = "# t = " + fmt(s.t) + "\nx,u,v,r\n";
    for (int i = 0; i < g.N; ++i) {
      txt += fmt(g.x(i)) + "," + fmt(s.u(i)) + "," + fmt(s.v(i)) + "," + fmt(s.r(i)) + "\n";
    }
    write_file(dir / "snapshots" / snapshot_name("snap", k, "csv"), txt);
  }
  // Space-time matrices: first row is x, first column is t.
  for (int f = 0; f < 3; ++f) {
    std::string txt = "t\\x";
    for (int i = 0; i < g.N; ++i) txt += "," + fmt(g.x(i));
    txt += "\n";
    for (const FieldState1D& s : res.snapshots) {
      const Eigen::VectorXd& v = f == 0 ? s.u : f == 1 ? s.v : s.r;
      txt += fmt(s.t);
      for (int i = 0; i < g.N; ++i) txt += "," + fmt(v(i));
      txt += "\n";
    }
    write_file(dir / (std::string("spacetime_") + "uvr"[f] + ".csv"), txt);
  }
  const PatternClass cls = classify_pattern(res.snapshots, c.thresholds);
  const auto& sn = res.snapshots;
  std::ostringstream o;
  o << "classification = " << name(cls) << "\n"
    << "final_time = " << fmt(sn.back().t) << "\n"
    << "final_relative_change = " << fmt(relative_change(sn[sn.size() - 2], sn.back())) << "\n"
    << "std_u = " << fmt(spatial_std(sn.back().u)) << "\n"
    << "min_value = " << fmt(res.min_value) << "\n"
    << "negativity_flag = " << yes_no(res.negativity_flag) << "\n"
    << "steps = " << res.steps << "\n";
  write_file(dir / "summary.txt", o.str());
  log << o.str();
}

inline void run_sim2d(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const Run2DResult res = run2d(c.params, primary_e8(c.params), c.sim2d);
  const Grid2D& g = res.grid;
  fs::create_directories(dir / "snapshots");
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    const FieldState2D& s = res.snapshots[k];
    write_file(dir / "snapshots" / snapshot_name("u", k, "csv"), matrix_text(s.u, g.nx, g.ny));
    write_file(dir / "snapshots" / snapshot_name("v", k, "csv"), matrix_text(s.v, g.nx, g.ny));
    write_file(dir / "snapshots" / snapshot_name("r", k, "csv"), matrix_text(s.r, g.nx, g.ny));
    write_file(dir / "snapshots" / snapshot_name("meta", k, "txt"),
               "t = " + fmt(s.t) + "\nnx = " + fmt(g.nx) + "\nny = " + fmt(g.ny) + "\ndx = " +
                   fmt(g.dx) + "\ndy = " + fmt(g.dy) + "\ndt = " + fmt(g.dt) +
                   "\nlayout = rows are x index, columns are y index\n");
  }
  const PatternClass cls = classify_pattern(res.snapshots, c.thresholds);
  const auto& sn = res.snapshots;
  std::ostringstream o;
  o << "classification = " << name(cls) << "\n"
    << "final_time = " << fmt(sn.back().t) << "\n"
    << "final_relative_change = " << fmt(relative_change(sn[sn.size() - 2], sn.back())) << "\n"
    << "std_u = " << fmt(spatial_std(sn.back().u)) << "\n"
    << "min_value = " << fmt(res.min_value) << "\n"
    << "negativity_flag = " << yes_no(res.negativity_flag) << "\n"
    << "steps = " << res.steps << "\n";
  write_file(dir / "summary.txt", o.str());
  log << o.str();
}

inline std::string fit_text(const std::string& pre, const FitResult& f) {
  std::ostringstream o;
  o << pre << "slope = " << fmt(f.slope) << "\n"
    << pre << "intercept = " << fmt(f.intercept) << "\n"
    << pre << "correlation = " << fmt(f.correlation) << "\n"
    << pre << "slope_ci95 = " << fmt(f.ci95_slope[0]) << " " << fmt(f.ci95_slope[1]) << "\n"
    << pre << "intercept_ci95 = " << fmt(f.ci95_intercept[0]) << " " << fmt(f.ci95_intercept[1]) << "\n"
    << pre << "n = " << f.n << "\n";
  return o.str();
}

inline void run_decay(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const DecayResult res = decay_experiment(c.params, c.m_values, c.sim1d, c.threads, c.thresholds);
  std::string csv = "m,err_u,err_v,err_r,err_combined,pattern,final_change,included\n";
  for (const DecayRecord& r : res.records) {
    csv += fmt(r.m) + "," + fmt(r.error.u) + "," + fmt(r.error.v) + "," + fmt(r.error.r) + "," +
           fmt(r.error.combined()) + "," + name(r.pattern) + "," + fmt(r.final_change) + "," +
           yes_no(r.included) + "\n";
  }
  write_file(dir / "records.csv", csv);
  std::string fit = fit_text("raw.", res.raw) + fit_text("loglog.", res.loglog) +
                    fit_text("loglog_u.", res.loglog_fields[0]) +
                    fit_text("loglog_v.", res.loglog_fields[1]) +
                    fit_text("loglog_r.", res.loglog_fields[2]);
  for (const std::string& n : res.notes) fit += "note = " + n + "\n";
  write_file(dir / "fit.txt", fit);
  log << fit;
}

inline void run_overexploit(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const ScenarioOutcome o = overexploitation_scenario(c.scenario_kind, c.params, c.scenario_init,
                                                      c.sim1d, c.scenario_tol);
  std::ostringstream s;
  s << "requested = " << name(o.requested) << "\n"
    << "hypotheses_ok = " << yes_no(o.hypotheses_ok) << "\n";
  for (const std::string& f : o.failed_hypotheses) s << "hypothesis_failed = " << f << "\n";
  s << "observed = " << (o.observed ? name(*o.observed) : "none") << "\n"
    << "outcome = "
    << (!o.hypotheses_ok ? "hypotheses not satisfied"
                         : (o.observed == o.requested ? "as predicted" : "not reached by t_end"))
    << "\n"
    << "final_mean = " << point_row(o.final_mean) << "\n"
    << "final_sup = " << point_row(o.final_sup) << "\n"
    << "final_min_r = " << fmt(o.final_min_r) << "\n"
    << "target_r = " << fmt(o.target_r) << "\n"
    << "time_to_threshold = " << (o.time_to_threshold ? fmt(*o.time_to_threshold) : std::string("none")) << "\n"
    << "negativity_flag = " << yes_no(o.negativity_flag) << "\n";
  write_file(dir / "outcome.txt", s.str());
  log << s.str();
}

}  // namespace detail

/// Creates the run directory, echoes the effective config and runs the
/// command. Returns the directory. Exceptions propagate after a
/// diagnostics file has been written.
inline fs::path dispatch(const RunConfig& c, std::ostream& log) {
  if (c.command == Command::Sim1D || c.command == Command::Sim2D || c.command == Command::Decay) {
    detail::primary_e8(c.params);
  }
  const fs::path dir = next_run_dir(c.out_dir, name(c.command));
  fs::create_directories(dir);
  detail::write_file(dir / "config.effective.ini", echo_config(c));
  try {
    switch (c.command) {
      case Command::Equilibria: detail::run_equilibria(c, dir, log); break;
      case Command::Turing: detail::run_turing(c, dir, log); break;
      case Command::TuringTable: detail::run_turing_table(c, dir, log); break;
      case Command::Sim1D: detail::run_sim1d(c, dir, log); break;
      case Command::Sim2D: detail::run_sim2d(c, dir, log); break;
      case Command::Decay: detail::run_decay(c, dir, log); break;
      case Command::Overexploit: detail::run_overexploit(c, dir, log); break;
    }
  } catch (const std::exception& e) {
    detail::write_file(dir / "diagnostics.txt", std::string("error = ") + e.what() + "\n");
    throw;
  }
  return dir;
}

}  // namespace foodchain
