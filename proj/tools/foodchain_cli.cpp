// foodchain-cli <command> --config <path> [--out <dir>] [--seed <int>] [--threads <int>]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "foodchain/config.hpp"
#include "foodchain/dispatch.hpp"

int main(int argc, char** argv) {
  using namespace foodchain;
  CLI::App app{"Ratio-dependent food chain with Allee effect: equilibria, Turing analysis, simulations"};
  std::string command, config_path, out_dir;
  long seed = -1;
  int threads = 1;
  app.add_option("command", command,
                 "equilibria | turing | turing-table | sim1d | sim2d | decay | overexploit")
      ->required();
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--out", out_dir, "base output directory (overrides [output] dir)");
  app.add_option("--seed", seed, "seed for random initial data (overrides [init] seed)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads for parameter sweeps")
      ->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    const auto cmd = parse_command(command);
    if (!cmd) throw ConfigError("unknown command '" + command + "'");
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    cfg = parse_config(text.str(), cmd);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.sim2d.seed = static_cast<std::uint64_t>(seed);
    cfg.threads = threads;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }

  try {
    const auto dir = dispatch(cfg, std::cout);
    std::cout << "output: " << dir.string() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
