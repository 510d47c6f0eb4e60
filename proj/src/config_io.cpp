#include "fedwire/config_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>

#include "fedwire/error.hpp"

namespace fedwire::config_io {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* section) {
  if (!j.is_object()) throw InputError(fmt::format("{}: expected an object", section));
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(fmt::format("{}: unknown field '{}'", section, key));
  }
}

template <typename T>
void get(const json& j, const char* key, T& out, const char* section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(fmt::format("{}.{}: {}", section, key, e.what()));
  }
}

template <typename T>
T require(const json& j, const char* key, const char* section) {
  if (!j.contains(key)) throw InputError(fmt::format("{}: missing field '{}'", section, key));
  T out{};
  get(j, key, out, section);
  return out;
}

fl_sim::LossKind parse_loss_kind(const std::string& s) {
  if (s == "linear_regression") return fl_sim::LossKind::linear_regression;
  if (s == "logistic_regression") return fl_sim::LossKind::logistic_regression;
  if (s == "negated_logistic") return fl_sim::LossKind::negated_logistic;
  throw InputError(fmt::format(
      "unknown loss kind '{}' (linear_regression, logistic_regression, negated_logistic)", s));
}

fl_sim::PartitionMode parse_partition(const json& j) {
  check_keys(j, {"mode", "shards_per_user", "shard_size"}, "training.partitions[]");
  fl_sim::PartitionMode m;
  const auto mode = require<std::string>(j, "mode", "training.partitions[]");
  if (mode == "iid")
    m.kind = fl_sim::PartitionMode::Kind::iid;
  else if (mode == "noniid")
    m.kind = fl_sim::PartitionMode::Kind::noniid;
  else
    throw InputError(fmt::format("training.partitions[].mode: unknown '{}' (iid, noniid)", mode));
  get(j, "shards_per_user", m.shards_per_user, "training.partitions[]");
  get(j, "shard_size", m.shard_size, "training.partitions[]");
  return m;
}

harness::SweepSpec parse_sweep(const json& j) {
  check_keys(j, {"variable", "values", "runs", "schemes", "outputs", "T", "T_relative"}, "sweep");
  harness::SweepSpec s;
  if (j.contains("variable"))
    s.variable = harness::parse_sweep_variable(require<std::string>(j, "variable", "sweep"));
  get(j, "values", s.values, "sweep");
  get(j, "runs", s.runs, "sweep");
  if (j.contains("schemes")) {
    s.schemes.clear();
    for (const auto& name : require<std::vector<std::string>>(j, "schemes", "sweep"))
      s.schemes.push_back(schemes::parse_scheme(name));
  }
  get(j, "outputs", s.outputs, "sweep");
  if (j.contains("T")) s.T = require<double>(j, "T", "sweep");
  get(j, "T_relative", s.T_relative, "sweep");
  return s;
}

harness::TrainingSpec parse_training(const json& j) {
  check_keys(j,
             {"dataset", "normalize", "synthetic", "loss", "proximal_gamma", "K", "partitions",
              "batch_sizes", "local_stop", "max_rounds", "eps0", "xi", "delta", "seed", "outputs"},
             "training");
  harness::TrainingSpec t;
  if (j.contains("dataset")) t.dataset_path = require<std::string>(j, "dataset", "training");
  get(j, "normalize", t.normalize, "training");
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    check_keys(s, {"samples", "dim", "noise", "kind", "seed"}, "training.synthetic");
    get(s, "samples", t.synthetic.samples, "training.synthetic");
    get(s, "dim", t.synthetic.dim, "training.synthetic");
    get(s, "noise", t.synthetic.noise, "training.synthetic");
    if (s.contains("kind"))
      t.synthetic.kind = parse_loss_kind(require<std::string>(s, "kind", "training.synthetic"));
    get(s, "seed", t.synthetic.seed, "training.synthetic");
  }
  if (j.contains("loss")) t.loss.kind = parse_loss_kind(require<std::string>(j, "loss", "training"));
  get(j, "proximal_gamma", t.loss.proximal_gamma, "training");
  get(j, "K", t.K, "training");
  if (j.contains("partitions")) {
    t.partitions.clear();
    for (const auto& p : j.at("partitions")) t.partitions.push_back(parse_partition(p));
  }
  get(j, "batch_sizes", t.batch_sizes, "training");
  if (j.contains("local_stop")) {
    const auto& s = j.at("local_stop");
    check_keys(s, {"eta", "iters"}, "training.local_stop");
    if (s.contains("eta") == s.contains("iters"))
      throw InputError("training.local_stop: give exactly one of 'eta' or 'iters'");
    t.local_stop = s.contains("eta")
                       ? fl_sim::LocalStop::accuracy(require<double>(s, "eta", "training.local_stop"))
                       : fl_sim::LocalStop::fixed(require<int>(s, "iters", "training.local_stop"));
  }
  get(j, "max_rounds", t.max_rounds, "training");
  get(j, "eps0", t.eps0, "training");
  if (j.contains("xi")) t.xi = require<double>(j, "xi", "training");
  if (j.contains("delta")) t.delta = require<double>(j, "delta", "training");
  get(j, "seed", t.seed, "training");
  get(j, "outputs", t.outputs, "training");
  return t;
}

}  // namespace

harness::ScenarioConfig scenario_config_from_json(const json& j) {
  const char* sec = "scenario";
  check_keys(j,
             {"K", "cell_side", "pathloss", "shadowing_sigma", "N0", "B", "s", "kappa", "C_range",
              "D_k", "p_max", "f_max", "seed"},
             sec);
  harness::ScenarioConfig c;
  get(j, "K", c.K, sec);
  get(j, "cell_side", c.cell_side, sec);
  if (j.contains("pathloss")) {
    const auto& pl = j.at("pathloss");
    check_keys(pl, {"intercept", "slope"}, "scenario.pathloss");
    get(pl, "intercept", c.pathloss.intercept, "scenario.pathloss");
    get(pl, "slope", c.pathloss.slope, "scenario.pathloss");
  }
  get(j, "shadowing_sigma", c.shadowing_sigma, sec);
  get(j, "N0", c.N0, sec);
  get(j, "B", c.B, sec);
  get(j, "s", c.s, sec);
  get(j, "kappa", c.kappa, sec);
  if (j.contains("C_range")) {
    const auto r = require<std::vector<double>>(j, "C_range", sec);
    if (r.size() != 2) throw InputError("scenario.C_range: expected [lo, hi]");
    c.C_range[0] = r[0];
    c.C_range[1] = r[1];
  }
  get(j, "D_k", c.D_k, sec);
  get(j, "p_max", c.p_max, sec);
  get(j, "f_max", c.f_max, sec);
  get(j, "seed", c.seed, sec);
  c.validate();
  return c;
}

json to_json(const harness::ScenarioConfig& c) {
  return {{"K", c.K},
          {"cell_side", c.cell_side},
          {"pathloss", {{"intercept", c.pathloss.intercept}, {"slope", c.pathloss.slope}}},
          {"shadowing_sigma", c.shadowing_sigma},
          {"N0", c.N0},
          {"B", c.B},
          {"s", c.s},
          {"kappa", c.kappa},
          {"C_range", {c.C_range[0], c.C_range[1]}},
          {"D_k", c.D_k},
          {"p_max", c.p_max},
          {"f_max", c.f_max},
          {"seed", c.seed}};
}

FlParams fl_params_from_json(const json& j) {
  const char* sec = "fl";
  check_keys(j,
             {"lipschitz", "strong_convexity", "xi", "step_size", "global_accuracy",
              "local_accuracy_bounds"},
             sec);
  FlParams fl{require<double>(j, "lipschitz", sec), require<double>(j, "strong_convexity", sec),
              require<double>(j, "xi", sec), require<double>(j, "step_size", sec),
              require<double>(j, "global_accuracy", sec)};
  if (j.contains("local_accuracy_bounds")) {
    const auto r = require<std::vector<double>>(j, "local_accuracy_bounds", sec);
    if (r.size() != 2) throw InputError("fl.local_accuracy_bounds: expected [lo, hi]");
    fl.local_accuracy_bounds = {r[0], r[1]};
  }
  fl.validate();
  return fl;
}

json to_json(const FlParams& fl) {
  return {{"lipschitz", fl.lipschitz},
          {"strong_convexity", fl.strong_convexity},
          {"xi", fl.xi},
          {"step_size", fl.step_size},
          {"global_accuracy", fl.global_accuracy},
          {"local_accuracy_bounds", {fl.local_accuracy_bounds.lo, fl.local_accuracy_bounds.hi}}};
}

Config parse_config(const json& j) {
  check_keys(j, {"scenario", "fl", "sweep", "training"}, "config");
  Config c;
  if (j.contains("scenario")) c.scenario = scenario_config_from_json(j.at("scenario"));
  if (j.contains("fl")) c.fl = fl_params_from_json(j.at("fl"));
  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"));
  if (j.contains("training")) c.training = parse_training(j.at("training"));
  return c;
}

namespace {
json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path, e.what()));
  }
}
}  // namespace

Config load_config(const std::string& path) { return parse_config(read_json(path)); }

json to_json(const NetworkScenario& sc) {
  json users = json::array();
  for (const auto& u : sc.users)
    users.push_back({{"channel_gain", u.channel_gain},
                     {"cycles_per_sample", u.cycles_per_sample},
                     {"samples", u.samples},
                     {"f_max", u.f_max},
                     {"p_max", u.p_max}});
  return {{"users", users},
          {"total_bandwidth", sc.total_bandwidth},
          {"noise_psd", sc.noise_psd},
          {"upload_bits", sc.upload_bits},
          {"kappa", sc.kappa}};
}

NetworkScenario scenario_from_json(const json& j) {
  const char* sec = "network scenario";
  check_keys(j, {"users", "total_bandwidth", "noise_psd", "upload_bits", "kappa"}, sec);
  NetworkScenario sc;
  sc.total_bandwidth = require<double>(j, "total_bandwidth", sec);
  sc.noise_psd = require<double>(j, "noise_psd", sec);
  sc.upload_bits = require<double>(j, "upload_bits", sec);
  sc.kappa = require<double>(j, "kappa", sec);
  if (!j.contains("users") || !j.at("users").is_array())
    throw InputError("network scenario: 'users' must be an array");
  for (const auto& u : j.at("users")) {
    const char* us = "network scenario.users[]";
    check_keys(u, {"channel_gain", "cycles_per_sample", "samples", "f_max", "p_max"}, us);
    sc.users.push_back({require<double>(u, "channel_gain", us),
                        require<double>(u, "cycles_per_sample", us),
                        require<double>(u, "samples", us), require<double>(u, "f_max", us),
                        require<double>(u, "p_max", us)});
  }
  sc.validate();
  return sc;
}

NetworkScenario load_scenario(const std::string& path) { return scenario_from_json(read_json(path)); }

json to_json(const Allocation& a) {
  return {{"t", a.t}, {"b", a.b}, {"f", a.f}, {"p", a.p}, {"eta", a.eta}};
}

json to_json(const SolveReport& r) {
  json violations = json::array();
  for (auto c : r.violations) violations.push_back(std::string(to_string(c)));
  const auto& bd = r.breakdown;
  return {{"scheme", r.scheme},
          {"T", r.T},
          {"T_star", r.T_star ? json(*r.T_star) : json(nullptr)},
          {"objective_trace", r.objective_trace},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"allocation", to_json(r.allocation)},
          {"breakdown",
           {{"comp_energy", bd.comp_energy},
            {"tx_energy", bd.tx_energy},
            {"total_energy", bd.total_energy},
            {"per_user_completion", bd.per_user_completion},
            {"global_iters", bd.global_iters},
            {"local_iters", bd.local_iters}}},
          {"violations", violations},
          {"events", r.events}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path));
  out << text;
  if (!out) throw InputError(fmt::format("write to '{}' failed", path));
}

}  // namespace fedwire::config_io
