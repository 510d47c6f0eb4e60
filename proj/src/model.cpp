#include "fedwire/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fedwire/error.hpp"

namespace fedwire {

void NetworkScenario::validate() const {
  if (users.empty()) throw DomainError("scenario: need at least one user");
  if (!(total_bandwidth > 0 && noise_psd > 0 && upload_bits > 0 && kappa > 0))
    throw DomainError("scenario: B, N0, s and kappa must be positive");
  for (const auto& u : users) {
    if (!(u.channel_gain > 0 && u.cycles_per_sample > 0 && u.samples > 0 && u.f_max > 0 &&
          u.p_max > 0))
      throw DomainError("scenario: user parameters must be positive");
  }
}

void FlParams::validate() const {
  if (!(strong_convexity > 0 && strong_convexity <= lipschitz))
    throw DomainError("fl params: need 0 < gamma <= L");
  if (!(xi > 0 && xi <= strong_convexity / lipschitz))
    throw DomainError("fl params: need 0 < xi <= gamma/L");
  if (!(step_size > 0 && step_size < 2.0 / lipschitz))
    throw DomainError("fl params: need 0 < delta < 2/L");
  if (!(global_accuracy > 0 && global_accuracy < 1))
    throw DomainError("fl params: need 0 < eps0 < 1");
  if (!(local_accuracy_bounds.lo > 0 && local_accuracy_bounds.lo < local_accuracy_bounds.hi &&
        local_accuracy_bounds.hi < 1))
    throw DomainError("fl params: local accuracy bounds must lie in (0, 1)");
}

IterationCoefficients IterationCoefficients::from(const FlParams& fl,
                                                  const NetworkScenario& scenario) {
  fl.validate();
  const double L = fl.lipschitz;
  const double g = fl.strong_convexity;
  const double d = fl.step_size;
  IterationCoefficients c;
  c.v = 2.0 / ((2.0 - L * d) * d * g);
  c.a = 2.0 * L * L / (g * g * fl.xi) * std::log(1.0 / fl.global_accuracy);
  c.A.reserve(scenario.size());
  for (const auto& u : scenario.users) c.A.push_back(c.v * u.cycles_per_sample * u.samples);
  return c;
}

double EnergyTimeBreakdown::total_comp() const {
  double s = 0;
  for (double e : comp_energy) s += e;
  return global_iters * s;
}

double EnergyTimeBreakdown::total_tx() const {
  double s = 0;
  for (double e : tx_energy) s += e;
  return global_iters * s;
}

double EnergyTimeBreakdown::completion_time() const {
  return per_user_completion.empty()
             ? 0.0
             : *std::max_element(per_user_completion.begin(), per_user_completion.end());
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::latency: return "latency";
    case Constraint::data: return "data";
    case Constraint::bandwidth: return "bandwidth";
    case Constraint::freq: return "freq";
    case Constraint::power: return "power";
    case Constraint::eta: return "eta";
    case Constraint::nonneg: return "nonneg";
  }
  return "unknown";
}

namespace model {

namespace {
void check_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("local accuracy eta must lie in (0, 1)");
}
}  // namespace

double local_iterations(double eta, const IterationCoefficients& coeffs) {
  check_eta(eta);
  return coeffs.v * std::log2(1.0 / eta);
}

double global_iterations(double eta, const IterationCoefficients& coeffs) {
  check_eta(eta);
  return coeffs.a / (1.0 - eta);
}

double comp_energy(const UserParams& user, double f, double iters, double kappa) {
  return kappa * iters * user.cycles_per_sample * user.samples * f * f;
}

double achievable_rate(const UserParams& user, double b, double p, double noise_psd) {
  if (p <= 0.0 || b <= 0.0) return 0.0;
  return b * std::log1p(user.channel_gain * p / (noise_psd * b)) / std::numbers::ln2;
}

double tx_energy(double t, double p) { return t * p; }

EnergyTimeBreakdown evaluate(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                             const Allocation& alloc) {
  const std::size_t K = scenario.size();
  if (alloc.t.size() != K || alloc.b.size() != K || alloc.f.size() != K || alloc.p.size() != K)
    throw DomainError("evaluate: allocation size does not match scenario");

  EnergyTimeBreakdown out;
  const double I_local = local_iterations(alloc.eta, coeffs);
  out.global_iters = global_iterations(alloc.eta, coeffs);
  out.comp_energy.resize(K);
  out.tx_energy.resize(K);
  out.per_user_completion.resize(K);
  out.local_iters.assign(K, I_local);

  double per_round = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& u = scenario.users[k];
    out.comp_energy[k] = comp_energy(u, alloc.f[k], I_local, scenario.kappa);
    out.tx_energy[k] = tx_energy(alloc.t[k], alloc.p[k]);
    per_round += out.comp_energy[k] + out.tx_energy[k];
    const double compute_time = I_local * u.cycles_per_sample * u.samples / alloc.f[k];
    out.per_user_completion[k] = out.global_iters * (compute_time + alloc.t[k]);
  }
  out.total_energy = out.global_iters * per_round;
  return out;
}

EnergyTimeBreakdown evaluate(const NetworkScenario& scenario, const FlParams& fl,
                             const Allocation& alloc) {
  return evaluate(scenario, IterationCoefficients::from(fl, scenario), alloc);
}

std::vector<Constraint> check_feasible(const NetworkScenario& scenario,
                                       const IterationCoefficients& coeffs,
                                       const Allocation& alloc, double T, double slack) {
  const std::size_t K = scenario.size();
  std::vector<Constraint> out;
  auto flag = [&](Constraint c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  if (alloc.t.size() != K || alloc.b.size() != K || alloc.f.size() != K || alloc.p.size() != K) {
    flag(Constraint::nonneg);
    return out;
  }

  const bool eta_ok = alloc.eta > 0.0 && alloc.eta < 1.0;
  if (!eta_ok) flag(Constraint::eta);

  double b_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& u = scenario.users[k];
    if (alloc.t[k] < 0 || alloc.b[k] < 0 || alloc.f[k] < 0 || alloc.p[k] < 0)
      flag(Constraint::nonneg);
    if (alloc.f[k] > u.f_max * (1 + slack)) flag(Constraint::freq);
    if (alloc.p[k] > u.p_max * (1 + slack)) flag(Constraint::power);
    b_sum += alloc.b[k];

    const double delivered = alloc.t[k] * achievable_rate(u, alloc.b[k], alloc.p[k],
                                                          scenario.noise_psd);
    if (delivered < scenario.upload_bits * (1 - slack)) flag(Constraint::data);

    if (eta_ok) {
      const double round_time =
          (alloc.f[k] > 0 ? coeffs.A[k] * std::log2(1.0 / alloc.eta) / alloc.f[k]
                          : (alloc.eta < 1.0 ? HUGE_VAL : 0.0)) +
          alloc.t[k];
      if (coeffs.a / (1.0 - alloc.eta) * round_time > T * (1 + slack)) flag(Constraint::latency);
    }
  }
  if (b_sum > scenario.total_bandwidth * (1 + slack)) flag(Constraint::bandwidth);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Constraint> check_feasible(const NetworkScenario& scenario, const FlParams& fl,
                                       const Allocation& alloc, double T, double slack) {
  return check_feasible(scenario, IterationCoefficients::from(fl, scenario), alloc, T, slack);
}

}  // namespace model

namespace units {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace units

}  // namespace fedwire
