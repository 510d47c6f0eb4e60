#include "fedwire/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>

#include "fedwire/config_io.hpp"
#include "fedwire/error.hpp"
#include "fedwire/time_opt.hpp"

namespace fedwire::harness {

void ScenarioConfig::validate() const {
  if (K < 1) throw InputError("scenario: K must be at least 1");
  if (!(cell_side > 0 && B > 0 && s > 0 && kappa > 0 && D_k > 0 && f_max > 0))
    throw InputError("scenario: cell_side, B, s, kappa, D_k, f_max must be positive");
  if (!(shadowing_sigma >= 0)) throw InputError("scenario: shadowing_sigma must be >= 0");
  if (!(C_range[0] > 0 && C_range[0] <= C_range[1]))
    throw InputError("scenario: C_range must be a positive interval");
  if (!std::isfinite(N0) || !std::isfinite(p_max))
    throw InputError("scenario: N0 and p_max must be finite dB values");
}

double channel_gain(const ScenarioConfig& config, double distance_m, double shadow_db) {
  const double d_km = std::max(distance_m, kMinDistance) / 1000.0;
  const double pl = config.pathloss.intercept + config.pathloss.slope * std::log10(d_km);
  return units::db_to_linear(-(pl + shadow_db));
}

NetworkScenario gen_scenario(const ScenarioConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const double half = config.cell_side / 2.0;
  std::uniform_real_distribution<double> pos(-half, half);
  std::normal_distribution<double> shadow(0.0, config.shadowing_sigma);
  std::uniform_real_distribution<double> cycles(config.C_range[0], config.C_range[1]);

  NetworkScenario sc;
  sc.total_bandwidth = config.B;
  sc.noise_psd = units::dbm_to_watt(config.N0);
  sc.upload_bits = config.s;
  sc.kappa = config.kappa;
  const double p_max = units::dbm_to_watt(config.p_max);
  sc.users.reserve(static_cast<std::size_t>(config.K));
  for (int k = 0; k < config.K; ++k) {
    const double x = pos(rng);
    const double y = pos(rng);
    const double x_db = config.shadowing_sigma > 0 ? shadow(rng) : 0.0;
    const double c = cycles(rng);
    sc.users.push_back(
        {channel_gain(config, std::hypot(x, y), x_db), c, config.D_k, config.f_max, p_max});
  }
  return sc;
}

FlParams default_fl_params() {
  static const FlParams cached = [] {
    const auto pool = fl_sim::make_synthetic({5000, 10, 0.1, fl_sim::LossKind::linear_regression, 0});
    const auto users = fl_sim::partition(pool, 10, {}, 0);
    const auto c = fl_sim::estimate_curvature(fl_sim::LossModel{}, users);
    return FlParams{c.lipschitz, c.strong_convexity, 0.1, 0.1, 1e-3};
  }();
  return cached;
}

namespace {

template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(ctx + e.what());
  } catch (const DomainError& e) {
    throw DomainError(ctx + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(ctx + e.what());
  } catch (const BracketError& e) {
    throw BracketError(ctx + e.what());
  } catch (const InputError& e) {
    throw InputError(ctx + e.what());
  }
}

std::string context(const schemes::SchemeSpec& spec) {
  return fmt::format("{} (seed {}): ", schemes::to_string(spec.kind), spec.seed);
}

}  // namespace

SolveReport run_experiment(const NetworkScenario& scenario, const FlParams& fl,
                           const schemes::SchemeSpec& spec, double T) {
  return with_context(context(spec), [&] { return schemes::solve(scenario, fl, T, spec); });
}

double run_completion(const NetworkScenario& scenario, const FlParams& fl,
                      const schemes::SchemeSpec& spec) {
  return with_context(context(spec), [&] { return schemes::min_time(scenario, fl, spec); });
}

std::vector<Constraint> recheck(const NetworkScenario& scenario, const FlParams& fl,
                                const SolveReport& report, schemes::SchemeKind kind, double T) {
  const auto co = IterationCoefficients::from(fl, scenario);
  switch (kind) {
    case schemes::SchemeKind::tdma:
      return schemes::check_feasible_tdma(scenario, co, report.allocation, T);
    case schemes::SchemeKind::rs:
      // each sampled subset was checked on its own sub-scenario
      return report.violations;
    default:
      return model::check_feasible(scenario, co, report.allocation, T);
  }
}

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::p_max: return "p_max";
    case SweepVariable::T: return "T";
    case SweepVariable::batch_size: return "batch_size";
    case SweepVariable::K: return "K";
  }
  return "?";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "p_max") return SweepVariable::p_max;
  if (name == "T") return SweepVariable::T;
  if (name == "batch_size") return SweepVariable::batch_size;
  if (name == "K") return SweepVariable::K;
  throw InputError(fmt::format("unknown sweep variable '{}' (p_max, T, batch_size, K)", name));
}

void SweepSpec::validate() const {
  if (runs < 1) throw InputError("sweep: runs must be at least 1");
  if (values.empty()) throw InputError("sweep: values must be non-empty");
  if (schemes.empty()) throw InputError("sweep: no schemes");
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("sweep: non-finite value");
    if (variable != SweepVariable::p_max && !(v > 0))
      throw InputError(fmt::format("sweep: {} values must be positive", to_string(variable)));
    if ((variable == SweepVariable::K || variable == SweepVariable::batch_size) &&
        v != std::floor(v))
      throw InputError(fmt::format("sweep: {} values must be integers", to_string(variable)));
  }
  if (T && !(*T > 0)) throw InputError("sweep: T must be positive");
}

std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(run)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t{words[0]} << 32) | words[1];
}

namespace {

ScenarioConfig apply_value(ScenarioConfig c, SweepVariable var, double value) {
  switch (var) {
    case SweepVariable::p_max: c.p_max = value; break;
    case SweepVariable::K: c.K = static_cast<int>(value); break;
    // computation per local iteration scales with the samples touched
    case SweepVariable::batch_size: c.D_k = value; break;
    case SweepVariable::T: break;
  }
  return c;
}

struct Cell {
  std::vector<SweepRow> rows;
  std::vector<std::optional<SolveReport>> reports;
};

Cell run_cell(const SweepSpec& spec, const ScenarioConfig& base, const FlParams& fl, double value,
              int run) {
  Cell cell;
  ScenarioConfig cfg = apply_value(base, spec.variable, value);
  cfg.seed = run_seed(base.seed, run);
  const NetworkScenario sc = gen_scenario(cfg);

  // T* of the proposed scheme, needed for relative budgets
  std::optional<double> prop_t_star;
  std::string prop_error;
  if (spec.T_relative) {
    try {
      prop_t_star = run_completion(sc, fl, {schemes::SchemeKind::proposed, 0, cfg.seed});
    } catch (const std::exception& e) {
      prop_error = e.what();
    }
  }

  std::optional<double> budget;
  if (spec.variable == SweepVariable::T)
    budget = value;
  else if (spec.T)
    budget = *spec.T;
  if (budget && spec.T_relative) budget = prop_t_star ? std::optional(*budget * *prop_t_star) : std::nullopt;

  for (auto kind : spec.schemes) {
    const schemes::SchemeSpec ss{kind, 0, cfg.seed};
    SweepRow row{value, run, std::string(schemes::to_string(kind)), cfg.seed,
                 {}, budget, {}, {}, {}, {}, {}, {}};
    std::optional<SolveReport> rep;
    try {
      if (spec.T_relative && !prop_t_star)
        throw InfeasibleError("proposed T* unavailable: " + prop_error);
      row.T_star = kind == schemes::SchemeKind::proposed && prop_t_star ? *prop_t_star
                                                                          : run_completion(sc, fl, ss);
      if (budget) {
        SolveReport r = run_experiment(sc, fl, ss, *budget);
        const auto bad = recheck(sc, fl, r, kind, *budget);
        if (!bad.empty()) {
          std::string names;
          for (auto c : bad) names += (names.empty() ? "" : "|") + std::string(to_string(c));
          throw InfeasibleError("allocation failed the feasibility recheck: " + names);
        }
        row.energy = r.breakdown.total_energy;
        row.comp_energy = r.breakdown.total_comp();
        row.tx_energy = r.breakdown.total_tx();
        row.eta = r.allocation.eta;
        row.iterations = r.iterations;
        rep = std::move(r);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      row.energy.reset();
      row.comp_energy.reset();
      row.tx_energy.reset();
      row.eta.reset();
      row.iterations.reset();
      rep.reset();
    }
    cell.rows.push_back(std::move(row));
    cell.reports.push_back(std::move(rep));
  }
  return cell;
}

std::string num(const std::optional<double>& v) {
  return v ? fmt::format("{:.17g}", *v) : std::string{};
}

// CSV field quoting for free-text error messages
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& base, const FlParams& fl) {
  spec.validate();
  base.validate();
  fl.validate();
  const std::size_t n_values = spec.values.size();
  const std::size_t n_cells = n_values * static_cast<std::size_t>(spec.runs);
  std::vector<Cell> cells(n_cells);
  for_each_index(spec.exec, n_cells, [&](std::size_t i) {
    const std::size_t v = i / static_cast<std::size_t>(spec.runs);
    const int run = static_cast<int>(i % static_cast<std::size_t>(spec.runs));
    cells[i] = run_cell(spec, base, fl, spec.values[v], run);
  });

  SweepResult out;
  std::vector<bool> have(spec.schemes.size(), false);
  for (auto& cell : cells) {
    for (std::size_t s = 0; s < cell.rows.size(); ++s) {
      if (!have[s] && cell.reports[s]) {
        out.representative.emplace_back(cell.rows[s].scheme, std::move(*cell.reports[s]));
        have[s] = true;
      }
      out.rows.push_back(std::move(cell.rows[s]));
    }
  }
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "value,run,scheme,seed,T_star,T,energy,comp_energy,tx_energy,eta,iterations,error\n";
  for (const auto& r : result.rows) {
    out += fmt::format("{:.17g},{},{},{},{},{},{},{},{},{},{},{}\n", r.value, r.run, r.scheme,
                       r.seed, num(r.T_star), num(r.T), num(r.energy), num(r.comp_energy),
                       num(r.tx_energy), num(r.eta),
                       r.iterations ? std::to_string(*r.iterations) : std::string{},
                       quote(r.error));
  }
  return out;
}

namespace {

struct Agg {
  int ok_time = 0, ok_energy = 0, failed = 0;
  double sum_time = 0, sum_energy = 0;
};

// (value, scheme) in first-appearance order
std::vector<std::pair<std::pair<double, std::string>, Agg>> aggregate(const SweepResult& result) {
  std::vector<std::pair<std::pair<double, std::string>, Agg>> out;
  for (const auto& r : result.rows) {
    auto key = std::make_pair(r.value, r.scheme);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == key; });
    if (it == out.end()) {
      out.push_back({key, Agg{}});
      it = out.end() - 1;
    }
    Agg& a = it->second;
    if (!r.error.empty()) ++a.failed;
    if (r.T_star) {
      ++a.ok_time;
      a.sum_time += *r.T_star;
    }
    if (r.energy) {
      ++a.ok_energy;
      a.sum_energy += *r.energy;
    }
  }
  return out;
}

}  // namespace

std::string sweep_aggregate_csv(const SweepResult& result) {
  std::string out = "value,scheme,runs_ok,runs_failed,mean_T_star,mean_energy\n";
  for (const auto& [key, a] : aggregate(result)) {
    out += fmt::format(
        "{:.17g},{},{},{},{},{}\n", key.first, key.second, std::max(a.ok_time, a.ok_energy),
        a.failed, a.ok_time ? fmt::format("{:.17g}", a.sum_time / a.ok_time) : std::string{},
        a.ok_energy ? fmt::format("{:.17g}", a.sum_energy / a.ok_energy) : std::string{});
  }
  return out;
}

void write_sweep(const SweepSpec& spec, const SweepResult& result) {
  const bool any_ok = std::any_of(result.rows.begin(), result.rows.end(),
                                  [](const SweepRow& r) { return r.error.empty(); });
  std::filesystem::create_directories(spec.outputs);
  const std::filesystem::path dir(spec.outputs);
  config_io::write_text((dir / "sweep.csv").string(), sweep_csv(result));
  config_io::write_text((dir / "sweep_aggregate.csv").string(), sweep_aggregate_csv(result));

  config_io::json summary;
  summary["variable"] = to_string(spec.variable);
  summary["values"] = spec.values;
  summary["runs"] = spec.runs;
  auto& means = summary["means"] = config_io::json::array();
  for (const auto& [key, a] : aggregate(result)) {
    config_io::json m{{"value", key.first}, {"scheme", key.second}, {"runs_failed", a.failed}};
    m["mean_T_star"] = a.ok_time ? config_io::json(a.sum_time / a.ok_time) : config_io::json(nullptr);
    m["mean_energy"] =
        a.ok_energy ? config_io::json(a.sum_energy / a.ok_energy) : config_io::json(nullptr);
    means.push_back(std::move(m));
  }
  auto& reps = summary["representative"] = config_io::json::object();
  for (const auto& [name, rep] : result.representative) reps[name] = config_io::to_json(rep);
  config_io::write_text((dir / "sweep_summary.json").string(), config_io::dump(summary));

  if (!any_ok) throw InfeasibleError("sweep: every run failed; see the error column in sweep.csv");
}

std::vector<TrainingColumn> run_training(const TrainingSpec& spec, Exec exec) {
  const fl_sim::UserDataset pool = spec.dataset_path
                                       ? fl_sim::read_csv(*spec.dataset_path, spec.normalize)
                                       : fl_sim::make_synthetic(spec.synthetic);
  std::vector<TrainingColumn> out;
  for (const auto& mode : spec.partitions) {
    const auto users = fl_sim::partition(pool, spec.K, mode, spec.seed);
    const auto curv = fl_sim::estimate_curvature(spec.loss, users);
    if (curv.singular)
      throw DomainError(fmt::format(
          "training: strong convexity estimate {:.3g} is below 1e-12; set loss.proximal_gamma",
          curv.strong_convexity));
    FlParams fl{curv.lipschitz, curv.strong_convexity,
                spec.xi.value_or(curv.strong_convexity / curv.lipschitz),
                spec.delta.value_or(1.0 / curv.lipschitz), spec.eps0};
    const std::string part =
        mode.kind == fl_sim::PartitionMode::Kind::iid ? "iid" : "noniid";
    for (int batch : spec.batch_sizes) {
      fl_sim::DaneConfig cfg;
      cfg.fl = fl;
      cfg.local_stop = spec.local_stop;
      cfg.max_rounds = spec.max_rounds;
      cfg.seed = spec.seed;
      cfg.exec = exec;
      if (batch > 0) {
        cfg.local_solver = fl_sim::DaneConfig::Solver::sgd;
        cfg.batch_size = batch;
      }
      TrainingColumn col;
      col.label = batch > 0 ? fmt::format("{}_b{}", part, batch) : part + "_full";
      col.trace = fl_sim::run_dane(spec.loss, users, cfg);
      long long total = 0;
      col.cumulative_computations.push_back(0);
      for (const auto& round : col.trace.local_iters) {
        for (std::size_t k = 0; k < round.size(); ++k)
          total += static_cast<long long>(round[k]) *
                   static_cast<long long>(batch > 0 ? batch : static_cast<int>(users[k].size()));
        col.cumulative_computations.push_back(total);
      }
      out.push_back(std::move(col));
    }
  }
  return out;
}

std::string training_csv(const std::vector<TrainingColumn>& columns) {
  std::string out = "round";
  std::size_t rows = 0;
  for (const auto& c : columns) {
    out += fmt::format(",loss_{0},computations_{0}", c.label);
    rows = std::max(rows, c.trace.global_loss.size());
  }
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r);
    for (const auto& c : columns) {
      if (r < c.trace.global_loss.size())
        out += fmt::format(",{:.17g},{}", c.trace.global_loss[r], c.cumulative_computations[r]);
      else
        out += ",,";
    }
    out += '\n';
  }
  return out;
}

}  // namespace fedwire::harness
