#pragma once

// Run configuration: sectioned `key = value` text.
//
//   # comment
//   command = turing
//   [params]
//   w1 = 0.96
//   ...
//
// Every key is checked against a fixed schema; errors carry the line number.

#include <array>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "foodchain/analysis.hpp"
#include "foodchain/error.hpp"
#include "foodchain/model.hpp"
#include "foodchain/solver1d.hpp"
#include "foodchain/solver2d.hpp"

namespace foodchain {

// ---------------------------------------------------------------------------
// Number formatting: shortest text that reads back to the same double.

inline std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string fmt(long x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(std::uint64_t x) { return std::to_string(x); }

// ---------------------------------------------------------------------------

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// section -> key -> entry; top-level keys live in section "".
using RawConfig = std::map<std::string, std::map<std::string, ConfigEntry>>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline RawConfig parse_raw_config(std::string_view text) {
  RawConfig raw;
  raw[""];
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line_view =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line(line_view);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line_no);
      if (raw.count(section) && section != "") {
        throw ConfigError("duplicate section [" + section + "]", line_no);
      }
      raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);
    auto& sec = raw[section];
    if (sec.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    sec[key] = {value, line_no};
  }
  return raw;
}

/// Typed, schema-checked view of a RawConfig. Keys are consumed as they are
/// read; whatever is left over at the end is reported as unknown.
class ConfigReader {
 public:
  explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has_section(const std::string& s) const { return raw_.count(s) > 0; }
  bool has(const std::string& s, const std::string& k) const {
    auto it = raw_.find(s);
    return it != raw_.end() && it->second.count(k);
  }
  int line_of(const std::string& s, const std::string& k) const {
    return has(s, k) ? raw_.at(s).at(k).line : 0;
  }

  std::optional<double> number(const std::string& s, const std::string& k) {
    auto e = take(s, k);
    if (!e) return std::nullopt;
    return parse_double(e->value, k, e->line);
  }
  double number(const std::string& s, const std::string& k, double fallback) {
    return number(s, k).value_or(fallback);
  }
  double required_number(const std::string& s, const std::string& k) {
    auto v = number(s, k);
    if (!v) throw ConfigError("missing required key '" + k + "' in [" + s + "]");
    return *v;
  }

  std::optional<long> integer(const std::string& s, const std::string& k) {
    auto e = take(s, k);
    if (!e) return std::nullopt;
    long out = 0;
    const char* b = e->value.data();
    const char* end = b + e->value.size();
    const auto res = std::from_chars(b, end, out);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError("'" + k + "' expects an integer, got '" + e->value + "'", e->line);
    }
    return out;
  }
  long integer(const std::string& s, const std::string& k, long fallback) {
    return integer(s, k).value_or(fallback);
  }

  std::optional<std::string> text(const std::string& s, const std::string& k) {
    auto e = take(s, k);
    if (!e) return std::nullopt;
    return e->value;
  }

  /// Whitespace- or comma-separated list of numbers.
  std::optional<std::vector<double>> numbers(const std::string& s, const std::string& k) {
    auto e = take(s, k);
    if (!e) return std::nullopt;
    std::string v = e->value;
    for (char& c : v) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(v);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok, k, e->line));
    if (out.empty()) throw ConfigError("'" + k + "' expects a list of numbers", e->line);
    return out;
  }

  /// Fails on any key that was not consumed.
  void check_all_consumed(const std::vector<std::string>& known_sections) const {
    for (const auto& [sec, keys] : raw_) {
      bool known = false;
      for (const auto& k : known_sections) known = known || k == sec;
      if (!known) {
        int line = keys.empty() ? 0 : keys.begin()->second.line;
        throw ConfigError("unknown section [" + sec + "]", line);
      }
      for (const auto& [key, entry] : keys) {
        throw ConfigError("unknown key '" + key + "'" + (sec.empty() ? "" : " in [" + sec + "]"),
                          entry.line);
      }
    }
  }


 private:
  std::optional<ConfigEntry> take(const std::string& s, const std::string& k) {
    auto it = raw_.find(s);
    if (it == raw_.end()) return std::nullopt;
    auto jt = it->second.find(k);
    if (jt == it->second.end()) return std::nullopt;
    ConfigEntry e = jt->second;
    it->second.erase(jt);
    consumed_lines_[s + "." + k] = e.line;
    return e;
  }

  static double parse_double(const std::string& v, const std::string& k, int line) {
    double out = 0.0;
    const char* b = v.data();
    const char* end = b + v.size();
    if (b != end && *b == '+') ++b;
    const auto res = std::from_chars(b, end, out);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
      throw ConfigError("'" + k + "' expects a number, got '" + v + "'", line);
    }
    return out;
  }

 public:
  /// Line a consumed key was read from (0 if never read).
  int consumed_line(const std::string& s, const std::string& k) const {
    auto it = consumed_lines_.find(s + "." + k);
    return it == consumed_lines_.end() ? 0 : it->second;
  }

 private:
  RawConfig raw_;
  std::map<std::string, int> consumed_lines_;
};

// ---------------------------------------------------------------------------

enum class Command { Equilibria, Turing, TuringTable, Sim1D, Sim2D, Decay, Overexploit };

inline const char* name(Command c) {
  switch (c) {
    case Command::Equilibria: return "equilibria";
    case Command::Turing: return "turing";
    case Command::TuringTable: return "turing-table";
    case Command::Sim1D: return "sim1d";
    case Command::Sim2D: return "sim2d";
    case Command::Decay: return "decay";
    default: return "overexploit";
  }
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (Command c : {Command::Equilibria, Command::Turing, Command::TuringTable, Command::Sim1D,
                    Command::Sim2D, Command::Decay, Command::Overexploit}) {
    if (s == name(c)) return c;
  }
  return std::nullopt;
}

struct DispersionGrid {
  double k2_max = 1000.0;
  int points = 2001;
};

struct RunConfig {
  Command command = Command::Equilibria;
  Params params;
  bool params_from_dimensional = false;
  DimensionalParams dimensional;
  Run1DConfig sim1d;
  Run2DConfig sim2d;
  DispersionGrid dispersion;
  std::vector<double> m_values;
  PatternThresholds thresholds;
  ScenarioKind scenario_kind = ScenarioKind::Persistence;
  ScenarioInit scenario_init;
  ScenarioTolerances scenario_tol;
  int threads = 1;
  std::string out_dir = "runs";
};

namespace detail {

inline bool needs_diffusion(Command c) { return c != Command::Equilibria && c != Command::TuringTable; }

inline std::vector<double> read_m_list(ConfigReader& rd, std::vector<double> fallback) {
  if (auto list = rd.numbers("experiment", "m_values")) {
    if (rd.has("experiment", "m_from") || rd.has("experiment", "m_to") ||
        rd.has("experiment", "m_count")) {
      throw ConfigError("give either m_values or m_from/m_to/m_count",
                        rd.consumed_line("experiment", "m_values"));
    }
    return *list;
  }
  const auto from = rd.number("experiment", "m_from");
  const auto to = rd.number("experiment", "m_to");
  const auto count = rd.integer("experiment", "m_count");
  if (from || to || count) {
    if (!from || !to || !count) throw ConfigError("m_from, m_to and m_count must be given together");
    if (*count < 2) throw ConfigError("m_count must be at least 2", rd.consumed_line("experiment", "m_count"));
    return linspace(*from, *to, int(*count));
  }
  return fallback;
}

inline std::array<double, 3> read_eps(ConfigReader& rd, std::array<double, 3> eps) {
  if (auto e = rd.numbers("init", "eps")) {
    if (e->size() == 1) return {(*e)[0], (*e)[0], (*e)[0]};
    if (e->size() != 3) throw ConfigError("eps expects 1 or 3 values", rd.consumed_line("init", "eps"));
    return {(*e)[0], (*e)[1], (*e)[2]};
  }
  return eps;
}

}  // namespace detail

/// Parses and fully validates a configuration. `command` (from the command
/// line) must agree with a `command` key if the file has one.
inline RunConfig parse_config(std::string_view text, std::optional<Command> command = std::nullopt) {
  ConfigReader rd(parse_raw_config(text));
  RunConfig cfg;

  const auto file_cmd = rd.text("", "command");
  if (file_cmd) {
    auto c = parse_command(*file_cmd);
    if (!c) throw ConfigError("unknown command '" + *file_cmd + "'", rd.consumed_line("", "command"));
    if (command && *command != *c) {
      throw ConfigError(std::string("config is for '") + name(*c) + "' but '" + name(*command) +
                            "' was requested",
                        rd.consumed_line("", "command"));
    }
    cfg.command = *c;
  } else if (command) {
    cfg.command = *command;
  } else {
    throw ConfigError("no command given");
  }
  const Command cmd = cfg.command;

  // Parameters: either [params] or [dimensional], not both.
  const bool has_p = rd.has_section("params"), has_dim = rd.has_section("dimensional");
  if (has_p && has_dim) throw ConfigError("give either [params] or [dimensional], not both");
  if (!has_p && !has_dim) throw ConfigError("missing [params] section");
  Params& p = cfg.params;
  if (has_p) {
    p.w1 = rd.required_number("params", "w1");
    p.w2 = rd.required_number("params", "w2");
    p.w3 = rd.required_number("params", "w3");
    p.w4 = rd.required_number("params", "w4");
    p.a2 = rd.required_number("params", "a2");
    p.c = rd.required_number("params", "c");
    p.D3 = rd.required_number("params", "D3");
    p.m = rd.number("params", "m", 0.0);
    const bool need_d = detail::needs_diffusion(cmd);
    for (auto [key, dst] : {std::pair<const char*, double*>{"d1", &p.d1}, {"d2", &p.d2}, {"d3", &p.d3}}) {
      if (auto v = rd.number("params", key)) {
        *dst = *v;
      } else if (need_d) {
        throw ConfigError(std::string("missing required key '") + key + "' in [params]");
      }
    }
  } else {
    cfg.params_from_dimensional = true;
    DimensionalParams& d = cfg.dimensional;
    for (auto [key, dst] : std::initializer_list<std::pair<const char*, double*>>{
             {"A1", &d.A1}, {"B1", &d.B1}, {"A2", &d.A2}, {"A3", &d.A3}, {"C", &d.C},
             {"M", &d.M}, {"W1", &d.W1}, {"W2", &d.W2}, {"W3", &d.W3}, {"W4", &d.W4},
             {"beta1", &d.beta1}, {"beta3", &d.beta3}, {"DU", &d.DU}, {"DV", &d.DV},
             {"DR", &d.DR}}) {
      *dst = rd.required_number("dimensional", key);
    }
    d.L = rd.number("dimensional", "L", d.L);
    try {
      p = nondimensionalize(d);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    if (detail::needs_diffusion(cmd)) {
      validate(p);
    } else {
      validate_kinetics(p);
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  // [grid]
  Run1DConfig& s1 = cfg.sim1d;
  Run2DConfig& s2 = cfg.sim2d;
  s1.N = int(rd.integer("grid", "N", s1.N));
  s2.grid.nx = int(rd.integer("grid", "nx", s2.grid.nx));
  s2.grid.ny = int(rd.integer("grid", "ny", s2.grid.ny));
  s2.grid.dx = rd.number("grid", "dx", s2.grid.dx);
  s2.grid.dy = rd.number("grid", "dy", s2.grid.dy);
  s2.grid.dt = rd.number("grid", "dt", s2.grid.dt);
  if (s1.N < 8) throw ConfigError("N must be at least 8", rd.consumed_line("grid", "N"));

  // [init]
  s1.eps = detail::read_eps(rd, s1.eps);
  s1.n = int(rd.integer("init", "n", s1.n));
  s2.n = s1.n;
  s2.amplitude = rd.number("init", "amplitude", s2.amplitude);
  s2.seed = std::uint64_t(rd.integer("init", "seed", long(s2.seed)));
  if (auto kind = rd.text("init", "kind")) {
    if (*kind == "random") {
      s2.init = Init2D::Random;
    } else if (*kind == "cosine") {
      s2.init = Init2D::Cosine;
    } else {
      throw ConfigError("init kind must be 'random' or 'cosine'", rd.consumed_line("init", "kind"));
    }
  }
  for (double e : s1.eps) {
    if (!(e >= 0.0)) throw ConfigError("eps must be nonnegative", rd.consumed_line("init", "eps"));
  }
  if (!(s2.amplitude >= 0.0)) {
    throw ConfigError("amplitude must be nonnegative", rd.consumed_line("init", "amplitude"));
  }

  // [time]
  const double t_end_default = cmd == Command::Sim2D ? s2.t_end : s1.t_end;
  const double t_end = rd.number("time", "t_end", cmd == Command::Overexploit ? 200.0 : t_end_default);
  const double every = rd.number("time", "snapshot_every", cmd == Command::Overexploit ? 1.0 : 100.0);
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive", rd.consumed_line("time", "t_end"));
  if (!(every > 0.0)) {
    throw ConfigError("snapshot_every must be positive", rd.consumed_line("time", "snapshot_every"));
  }
  s1.t_end = s2.t_end = t_end;
  s1.snapshot_every = s2.snapshot_every = every;
  s1.dt = rd.number("time", "dt", s1.dt);
  if (!(s1.dt > 0.0)) throw ConfigError("dt must be positive", rd.consumed_line("time", "dt"));
  s1.rtol = rd.number("time", "rtol", s1.rtol);
  s1.atol = rd.number("time", "atol", s1.atol);
  if (auto integ = rd.text("time", "integrator")) {
    if (*integ == "imex") {
      s1.integrator = Integrator1D::Imex;
    } else if (*integ == "rk45") {
      s1.integrator = Integrator1D::Rk45;
    } else {
      throw ConfigError("integrator must be 'imex' or 'rk45'", rd.consumed_line("time", "integrator"));
    }
  }

  if (cmd == Command::Sim2D) {
    const double dmax = std::max({p.d1, p.d2, p.d3});
    Grid2D g = s2.grid;
    if (g.nx < 2 || g.ny < 2 || !(g.dx > 0.0) || !(g.dy > 0.0) || !(g.dt > 0.0)) {
      throw ConfigError("2D grid needs nx, ny >= 2 and positive dx, dy, dt");
    }
    if (cfl_number(g, dmax) > 0.5) {
      throw ConfigError("dt = " + fmt(g.dt) + " violates the stability bound dt <= " +
                            fmt(max_stable_dt(g, dmax)),
                        rd.consumed_line("grid", "dt"));
    }
  }

  // [turing]
  cfg.dispersion.k2_max = rd.number("turing", "k2_max", cfg.dispersion.k2_max);
  cfg.dispersion.points = int(rd.integer("turing", "k2_points", cfg.dispersion.points));
  if (!(cfg.dispersion.k2_max > 0.0) || cfg.dispersion.points < 2) {
    throw ConfigError("dispersion grid needs k2_max > 0 and k2_points >= 2");
  }

  // [experiment]
  const std::vector<double> m_default =
      cmd == Command::Decay ? linspace(0.0, 0.0035, 13)
                            : std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  cfg.m_values = detail::read_m_list(rd, m_default);
  for (double m : cfg.m_values) {
    if (!(m >= 0.0)) throw ConfigError("m values must be nonnegative");
  }
  if (cmd == Command::Decay) {
    if (std::find(cfg.m_values.begin(), cfg.m_values.end(), 0.0) == cfg.m_values.end()) {
      throw ConfigError("decay needs m = 0 in the m list");
    }
    if (cfg.m_values.size() < 4) throw ConfigError("decay needs at least 4 m values");
  }
  cfg.thresholds.steady_rel = rd.number("experiment", "steady_tol", cfg.thresholds.steady_rel);
  cfg.thresholds.homogeneous_rel =
      rd.number("experiment", "homogeneous_tol", cfg.thresholds.homogeneous_rel);

  // [scenario]
  if (auto kind = rd.text("scenario", "kind")) {
    bool ok = false;
    for (ScenarioKind k : {ScenarioKind::TotalExtinction, ScenarioKind::PreyRecovery,
                           ScenarioKind::Persistence}) {
      if (*kind == name(k)) {
        cfg.scenario_kind = k;
        ok = true;
      }
    }
    if (!ok) throw ConfigError("unknown scenario kind '" + *kind + "'", rd.consumed_line("scenario", "kind"));
  } else if (cmd == Command::Overexploit) {
    throw ConfigError("missing required key 'kind' in [scenario]");
  }
  ScenarioInit& si = cfg.scenario_init;
  if (cmd == Command::Overexploit) {
    si.base.u = rd.required_number("scenario", "u0");
    si.base.v = rd.required_number("scenario", "v0");
    si.base.r = rd.required_number("scenario", "r0");
  } else {
    si.base = {rd.number("scenario", "u0", 0.0), rd.number("scenario", "v0", 0.0),
               rd.number("scenario", "r0", 0.0)};
  }
  si.amp = {rd.number("scenario", "amp_u", 0.0), rd.number("scenario", "amp_v", 0.0),
            rd.number("scenario", "amp_r", 0.0)};
  si.n = int(rd.integer("scenario", "n", si.n));
  for (double a : si.amp) {
    if (!(std::abs(a) <= 1.0)) throw ConfigError("scenario amplitudes must lie in [-1, 1]");
  }
  if (si.base.u < 0.0 || si.base.v < 0.0 || si.base.r < 0.0) {
    throw ConfigError("scenario initial densities must be nonnegative");
  }
  cfg.scenario_tol.extinct = rd.number("scenario", "extinct_tol", cfg.scenario_tol.extinct);
  cfg.scenario_tol.close = rd.number("scenario", "close_tol", cfg.scenario_tol.close);

  if (auto dir = rd.text("output", "dir")) cfg.out_dir = *dir;

  rd.check_all_consumed({"", "params", "dimensional", "grid", "init", "time", "turing",
                         "experiment", "scenario", "output"});
  return cfg;
}

/// The effective configuration in the input format; parsing it back gives the same run.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  const Params& p = c.params;
  o << "command = " << name(c.command) << "\n\n[params]\n";
  o << "w1 = " << fmt(p.w1) << "\nw2 = " << fmt(p.w2) << "\nw3 = " << fmt(p.w3)
    << "\nw4 = " << fmt(p.w4) << "\na2 = " << fmt(p.a2) << "\nc = " << fmt(p.c)
    << "\nD3 = " << fmt(p.D3) << "\nm = " << fmt(p.m) << "\n";
  if (p.d1 > 0.0) o << "d1 = " << fmt(p.d1) << "\n";
  if (p.d2 > 0.0) o << "d2 = " << fmt(p.d2) << "\n";
  if (p.d3 > 0.0) o << "d3 = " << fmt(p.d3) << "\n";
  const Run1DConfig& s1 = c.sim1d;
  const Run2DConfig& s2 = c.sim2d;
  o << "\n[grid]\nN = " << s1.N << "\nnx = " << s2.grid.nx << "\nny = " << s2.grid.ny
    << "\ndx = " << fmt(s2.grid.dx) << "\ndy = " << fmt(s2.grid.dy) << "\ndt = " << fmt(s2.grid.dt)
    << "\n";
  o << "\n[init]\neps = " << fmt(s1.eps[0]) << " " << fmt(s1.eps[1]) << " " << fmt(s1.eps[2])
    << "\nn = " << s1.n << "\namplitude = " << fmt(s2.amplitude) << "\nseed = " << s2.seed
    << "\nkind = " << (s2.init == Init2D::Random ? "random" : "cosine") << "\n";
  o << "\n[time]\nt_end = " << fmt(s1.t_end) << "\nsnapshot_every = " << fmt(s1.snapshot_every)
    << "\ndt = " << fmt(s1.dt) << "\nintegrator = "
    << (s1.integrator == Integrator1D::Imex ? "imex" : "rk45") << "\nrtol = " << fmt(s1.rtol)
    << "\natol = " << fmt(s1.atol) << "\n";
  o << "\n[turing]\nk2_max = " << fmt(c.dispersion.k2_max) << "\nk2_points = " << c.dispersion.points
    << "\n";
  o << "\n[experiment]\nm_values =";
  for (double m : c.m_values) o << " " << fmt(m);
  o << "\nsteady_tol = " << fmt(c.thresholds.steady_rel)
    << "\nhomogeneous_tol = " << fmt(c.thresholds.homogeneous_rel) << "\n";
  if (c.command == Command::Overexploit) {
    const ScenarioInit& si = c.scenario_init;
    o << "\n[scenario]\nkind = " << name(c.scenario_kind) << "\nu0 = " << fmt(si.base.u)
      << "\nv0 = " << fmt(si.base.v) << "\nr0 = " << fmt(si.base.r)
      << "\namp_u = " << fmt(si.amp[0]) << "\namp_v = " << fmt(si.amp[1])
      << "\namp_r = " << fmt(si.amp[2]) << "\nn = " << si.n
      << "\nextinct_tol = " << fmt(c.scenario_tol.extinct)
      << "\nclose_tol = " << fmt(c.scenario_tol.close) << "\n";
  }
  return o.str();
}

}  // namespace foodchain
