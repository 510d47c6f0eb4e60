#pragma once

// Scenario generation, experiment orchestration and sweep/training drivers
// writing CSV and JSON artifacts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedwire/exec.hpp"
#include "fedwire/fl_sim.hpp"
#include "fedwire/model.hpp"
#include "fedwire/report.hpp"
#include "fedwire/schemes.hpp"

namespace fedwire::harness {

struct PathLoss {
  double intercept = 128.1;  ///< dB at 1 km
  double slope = 37.6;       ///< dB per decade of km
};

struct ScenarioConfig {
  int K = 50;
  double cell_side = 500.0;  ///< m, BS at the center of the square
  PathLoss pathloss{};
  double shadowing_sigma = 8.0;  ///< dB
  double N0 = -174.0;            ///< dBm/Hz
  double B = 20e6;               ///< Hz
  double s = 28.1e3;             ///< bits
  double kappa = 1e-28;
  double C_range[2] = {1e4, 3e4};  ///< cycles/sample
  double D_k = 500.0;
  double p_max = 10.0;  ///< dBm
  double f_max = 2e9;   ///< Hz
  std::uint64_t seed = 0;

  void validate() const;
};

/// Users closer than this to the BS are placed at this distance.
inline constexpr double kMinDistance = 1.0;  // m

/// 10^(-(PL(d) + shadow)/10) with d in metres.
double channel_gain(const ScenarioConfig& config, double distance_m, double shadow_db);

NetworkScenario gen_scenario(const ScenarioConfig& config);

/// L and gamma measured with estimate_curvature on a fixed synthetic
/// linear-regression task; xi = 1/10, delta = 1/10, eps0 = 1e-3.
FlParams default_fl_params();

/// Solver run with scheme/seed context attached to any error.
SolveReport run_experiment(const NetworkScenario& scenario, const FlParams& fl,
                           const schemes::SchemeSpec& spec, double T);

/// Completion-time experiment (time_opt for the proposed scheme).
double run_completion(const NetworkScenario& scenario, const FlParams& fl,
                      const schemes::SchemeSpec& spec);

/// Violations of the scheme's own constraint set.
std::vector<Constraint> recheck(const NetworkScenario& scenario, const FlParams& fl,
                                const SolveReport& report, schemes::SchemeKind kind, double T);

enum class SweepVariable { p_max, T, batch_size, K };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::p_max;
  std::vector<double> values;
  int runs = 50;
  std::vector<schemes::SchemeKind> schemes{schemes::SchemeKind::proposed};
  std::string outputs = "out";
  /// Latency budget for energy solves in p_max/batch_size/K sweeps; when
  /// absent only completion times are computed.
  std::optional<double> T;
  /// Read T (or T sweep values) as multiples of the proposed scheme's T*.
  bool T_relative = false;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct SweepRow {
  double value;
  int run;
  std::string scheme;
  std::uint64_t seed;
  std::optional<double> T_star;
  std::optional<double> T;
  std::optional<double> energy;
  std::optional<double> comp_energy;
  std::optional<double> tx_energy;
  std::optional<double> eta;
  std::optional<int> iterations;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< ordered by (value, run, scheme)
  std::vector<std::pair<std::string, SolveReport>> representative;  ///< first success per scheme
};

/// Seed of the scenario used by run r; shared by every sweep value.
std::uint64_t run_seed(std::uint64_t base_seed, int run);

SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& base, const FlParams& fl);

/// Writes <outputs>/sweep.csv, sweep_aggregate.csv, sweep_summary.json.
/// Throws when every row failed.
void write_sweep(const SweepSpec& spec, const SweepResult& result);

/// CSV text of the long-form table (also used for the determinism check).
std::string sweep_csv(const SweepResult& result);
std::string sweep_aggregate_csv(const SweepResult& result);

struct TrainingSpec {
  std::optional<std::string> dataset_path;  ///< CSV; synthetic data otherwise
  bool normalize = true;
  fl_sim::SyntheticSpec synthetic{};
  fl_sim::LossModel loss{};
  int K = 12;
  std::vector<fl_sim::PartitionMode> partitions{fl_sim::PartitionMode{}};
  std::vector<int> batch_sizes{0};  ///< 0 = full-batch GD
  fl_sim::LocalStop local_stop = fl_sim::LocalStop::accuracy(0.1);
  int max_rounds = 200;
  double eps0 = 1e-3;
  std::optional<double> xi;     ///< default gamma/L (measured)
  std::optional<double> delta;  ///< default 1/L (measured)
  std::uint64_t seed = 0;
  std::string outputs = "out";
};

struct TrainingColumn {
  std::string label;
  fl_sim::TrainingTrace trace;
  std::vector<long long> cumulative_computations;  ///< sample-gradient evaluations
};

std::vector<TrainingColumn> run_training(const TrainingSpec& spec, Exec exec = Exec::serial);
std::string training_csv(const std::vector<TrainingColumn>& columns);

}  // namespace fedwire::harness
