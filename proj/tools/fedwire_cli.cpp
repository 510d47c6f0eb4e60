// fedwire: command-line front end for the solvers and experiment drivers.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedwire/config_io.hpp"
#include "fedwire/error.hpp"
#include "fedwire/harness.hpp"
#include "fedwire/schemes.hpp"

namespace fs = std::filesystem;
using namespace fedwire;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> runs;
  std::vector<std::string> schemes;
};

void add_common(CLI::App* cmd, Common& c, bool with_runs, bool with_schemes) {
  cmd->add_option("--config", c.config, "JSON config file (scenario/fl/sweep/training sections)");
  cmd->add_option("--seed", c.seed, "override the RNG seed");
  cmd->add_option("--out", c.out, "output directory");
  if (with_runs) cmd->add_option("--runs", c.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  if (with_schemes)
    cmd->add_option("--scheme", c.schemes, "proposed,eb_fdma,fe_fdma,tdma,rs")->delimiter(',');
}

config_io::Config load(const Common& c) {
  config_io::Config cfg = c.config.empty() ? config_io::Config{} : config_io::load_config(c.config);
  if (c.seed) {
    cfg.scenario.seed = *c.seed;
    cfg.training.seed = *c.seed;
  }
  if (c.runs) cfg.sweep.runs = *c.runs;
  if (!c.schemes.empty()) {
    cfg.sweep.schemes.clear();
    for (const auto& s : c.schemes) cfg.sweep.schemes.push_back(schemes::parse_scheme(s));
  }
  return cfg;
}

std::string out_dir(const Common& c, const std::string& fallback) {
  const std::string dir = c.out.empty() ? fallback : c.out;
  fs::create_directories(dir);
  return dir;
}

NetworkScenario scenario_for(const std::string& path, const config_io::Config& cfg) {
  return path.empty() ? harness::gen_scenario(cfg.scenario) : config_io::load_scenario(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient federated learning over wireless networks"};
  app.require_subcommand(1);

  Common gen_c, energy_c, time_c, train_c, sweep_c;
  std::string energy_scenario, time_scenario;
  double energy_T = 0.0;
  bool sweep_serial = false;

  auto* gen = app.add_subcommand("gen", "generate a scenario file");
  add_common(gen, gen_c, false, false);

  auto* solve_energy = app.add_subcommand("solve-energy", "minimize energy at a latency budget T");
  add_common(solve_energy, energy_c, false, true);
  solve_energy->add_option("--scenario", energy_scenario, "scenario file from `gen`");
  solve_energy->add_option("--T", energy_T, "latency budget in seconds")->required()->check(CLI::PositiveNumber);

  auto* solve_time = app.add_subcommand("solve-time", "minimum completion time per scheme");
  add_common(solve_time, time_c, false, true);
  solve_time->add_option("--scenario", time_scenario, "scenario file from `gen`");

  auto* train = app.add_subcommand("train", "run federated training and write the loss curve");
  add_common(train, train_c, false, false);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep over Monte Carlo scenarios");
  add_common(sweep, sweep_c, true, true);
  sweep->add_flag("--serial", sweep_serial, "run cells on one thread");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = load(gen_c);
      const auto dir = out_dir(gen_c, ".");
      const auto path = (fs::path(dir) / "scenario.json").string();
      config_io::write_text(path, config_io::dump(config_io::to_json(harness::gen_scenario(cfg.scenario))));
      std::cout << path << "\n";
    } else if (*solve_energy) {
      const auto cfg = load(energy_c);
      const auto sc = scenario_for(energy_scenario, cfg);
      const FlParams fl = cfg.fl.value_or(harness::default_fl_params());
      const auto kinds = energy_c.schemes.empty() ? std::vector{schemes::SchemeKind::proposed}
                                                  : cfg.sweep.schemes;
      const auto dir = out_dir(energy_c, ".");
      for (auto kind : kinds) {
        const auto rep = harness::run_experiment(sc, fl, {kind, 0, cfg.scenario.seed}, energy_T);
        const auto path = (fs::path(dir) / fmt::format("report_{}.json", schemes::to_string(kind))).string();
        config_io::write_text(path, config_io::dump(config_io::to_json(rep)));
        fmt::print("{:<9} energy {:.17g} J  eta {:.6g}  iterations {}  violations {}\n", rep.scheme,
                   rep.breakdown.total_energy, rep.allocation.eta, rep.iterations,
                   rep.violations.size());
      }
    } else if (*solve_time) {
      const auto cfg = load(time_c);
      const auto sc = scenario_for(time_scenario, cfg);
      const FlParams fl = cfg.fl.value_or(harness::default_fl_params());
      const auto kinds = time_c.schemes.empty() ? std::vector{schemes::SchemeKind::proposed}
                                                : cfg.sweep.schemes;
      config_io::json out = config_io::json::object();
      for (auto kind : kinds) {
        const double t = harness::run_completion(sc, fl, {kind, 0, cfg.scenario.seed});
        out[std::string(schemes::to_string(kind))] = t;
        fmt::print("{:<9} T* {:.17g} s\n", schemes::to_string(kind), t);
      }
      const auto dir = out_dir(time_c, ".");
      config_io::write_text((fs::path(dir) / "completion_time.json").string(), config_io::dump(out));
    } else if (*train) {
      auto cfg = load(train_c);
      const auto dir = out_dir(train_c, cfg.training.outputs);
      const auto cols = harness::run_training(cfg.training);
      const auto path = (fs::path(dir) / "training.csv").string();
      config_io::write_text(path, harness::training_csv(cols));
      for (const auto& c : cols)
        fmt::print("{:<16} rounds {:>4}  final loss {:.10g}{}\n", c.label,
                   c.trace.global_loss.size() - 1, c.trace.global_loss.back(),
                   c.trace.rounds_to_eps0 ? "" : "  (eps0 not reached)");
      std::cout << path << "\n";
    } else if (*sweep) {
      auto cfg = load(sweep_c);
      cfg.sweep.outputs = out_dir(sweep_c, cfg.sweep.outputs);
      if (sweep_serial) cfg.sweep.exec = Exec::serial;
      const FlParams fl = cfg.fl.value_or(harness::default_fl_params());
      const auto result = harness::run_sweep(cfg.sweep, cfg.scenario, fl);
      harness::write_sweep(cfg.sweep, result);
      std::size_t failed = 0;
      for (const auto& r : result.rows) failed += !r.error.empty();
      fmt::print("{} rows ({} failed) -> {}\n", result.rows.size(), failed, cfg.sweep.outputs);
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
