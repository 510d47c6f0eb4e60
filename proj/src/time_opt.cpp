#include "fedwire/time_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "fedwire/error.hpp"

namespace fedwire::time_opt {

namespace {
constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double snr_scale(const NetworkScenario& sc, std::size_t k) {
  const auto& u = sc.users[k];
  return u.channel_gain * u.p_max / sc.noise_psd;  // G / N0, in Hz
}
}  // namespace

double transmit_time(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                     std::size_t k, double T, double eta) {
  return (1.0 - eta) * T / coeffs.a + coeffs.A[k] * std::log2(eta) / scenario.users[k].f_max;
}

double time_floor(const NetworkScenario& scenario, std::size_t k) {
  return scenario.upload_bits * kLn2 / snr_scale(scenario, k);
}

std::optional<numerics::Interval> eta_domain(const NetworkScenario& scenario,
                                             const IterationCoefficients& coeffs, double T) {
  if (!(T > 0)) return std::nullopt;
  numerics::Interval acc{0.0, 1.0};
  for (std::size_t k = 0; k < scenario.size(); ++k) {
    const double peak = coeffs.a * coeffs.A[k] / (kLn2 * scenario.users[k].f_max * T);
    if (!(peak < 1.0)) return std::nullopt;
    const auto fn = [&](double eta) { return transmit_time(scenario, coeffs, k, T, eta); };
    const auto iv = numerics::concave_superlevel(fn, 0.0, peak, 1.0, time_floor(scenario, k));
    if (!iv) return std::nullopt;
    acc.lo = std::max(acc.lo, iv->lo);
    acc.hi = std::min(acc.hi, iv->hi);
    if (!(acc.lo < acc.hi)) return std::nullopt;
  }
  return acc;
}

double v_k(const NetworkScenario& scenario, const IterationCoefficients& coeffs, std::size_t k,
           double T, double eta) {
  const double phi = transmit_time(scenario, coeffs, k, T, eta);
  if (!(phi > 0)) throw DomainError("v_k: eta outside the domain (no upload time left)");
  return scenario.upload_bits / phi;
}

double v_k_prime(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                 std::size_t k, double T, double eta) {
  const double phi = transmit_time(scenario, coeffs, k, T, eta);
  if (!(phi > 0)) throw DomainError("v_k_prime: eta outside the domain");
  const double dphi = -T / coeffs.a + coeffs.A[k] / (kLn2 * scenario.users[k].f_max * eta);
  return -scenario.upload_bits * dphi / (phi * phi);
}

double z_k(const NetworkScenario& scenario, std::size_t k, double b) {
  if (!(b > 0)) return 0.0;
  return b * std::log1p(snr_scale(scenario, k) / b) / kLn2;
}

double z_k_prime(const NetworkScenario& scenario, std::size_t k, double b) {
  const double q = snr_scale(scenario, k) / b;
  // log1p(q) - q/(1+q) loses everything to cancellation for small q.
  if (q < 1e-3) return q * q * (0.5 - q * (2.0 / 3.0 - q * (0.75 - q * 0.8))) / kLn2;
  return (std::log1p(q) - q / (1.0 + q)) / kLn2;
}

double u_k(const NetworkScenario& scenario, std::size_t k, double rate) {
  if (!(rate >= 0)) throw DomainError("u_k: rate must be non-negative");
  if (rate == 0.0) return 0.0;
  const double G = snr_scale(scenario, k);
  const double c = kLn2 * rate / G;
  if (!(c < 1.0))
    throw DomainError(fmt::format("u_k: rate {:.6g} exceeds the capacity limit of user {}", rate, k));
  const double arg = -c * std::exp(-c);
  double b = arg == 0.0 ? rate * kLn2 : -kLn2 * rate / (numerics::lambert_wm1(arg) + c);
  // W + c cancels as c -> 1; a few Newton steps on the concave z restore digits.
  for (int it = 0; it < 4; ++it) {
    const double step = (z_k(scenario, k, b) - rate) / z_k_prime(scenario, k, b);
    const double next = b - step;
    if (!std::isfinite(next) || !(next > 0)) break;
    if (next == b) break;
    b = next;
  }
  return b;
}

double u_k_prime(const NetworkScenario& scenario, std::size_t k, double rate) {
  return 1.0 / z_k_prime(scenario, k, u_k(scenario, k, rate));
}

double phi_slope(const NetworkScenario& scenario, const IterationCoefficients& coeffs, double T,
                 double eta, Exec exec) {
  std::vector<double> terms(scenario.size());
  for_each_index(exec, terms.size(), [&](std::size_t k) {
    terms[k] = u_k_prime(scenario, k, v_k(scenario, coeffs, k, T, eta)) *
               v_k_prime(scenario, coeffs, k, T, eta);
  });
  double s = 0.0;
  for (double x : terms) s += x;
  return s;
}

double required_bandwidth(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                          double T, double eta, Exec exec) {
  std::vector<double> terms(scenario.size());
  for_each_index(exec, terms.size(), [&](std::size_t k) {
    terms[k] = u_k(scenario, k, v_k(scenario, coeffs, k, T, eta));
  });
  double s = 0.0;
  for (double x : terms) s += x;
  return s;
}

double eta_star(const NetworkScenario& scenario, const IterationCoefficients& coeffs, double T,
                Exec exec) {
  const auto dom = eta_domain(scenario, coeffs, T);
  if (!dom) throw DomainError(fmt::format("eta_star: empty eta domain at T = {}", T));
  const double w = dom->hi - dom->lo;
  const double lo = dom->lo + 1e-9 * w;
  const double hi = dom->hi - 1e-9 * w;
  if (!(lo < hi)) return 0.5 * (dom->lo + dom->hi);
  const auto slope = [&](double eta) { return phi_slope(scenario, coeffs, T, eta, exec); };
  if (slope(lo) >= 0) return lo;
  if (slope(hi) <= 0) return hi;
  const numerics::Tolerance tol{1e-16, 1e-13, 400};
  return numerics::bisect_root(slope, lo, hi, tol);
}

FeasibilityProbe probe(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                       double T, Exec exec) {
  FeasibilityProbe pr;
  pr.T = T;
  pr.eta_domain = eta_domain(scenario, coeffs, T);
  if (!pr.eta_domain) {
    pr.eta_star = kNaN;
    pr.required_bandwidth = kInf;
    return pr;
  }
  pr.eta_star = eta_star(scenario, coeffs, T, exec);
  pr.required_bandwidth = required_bandwidth(scenario, coeffs, T, pr.eta_star, exec);
  pr.feasible = pr.required_bandwidth <= scenario.total_bandwidth;
  return pr;
}

FeasibilityProbe probe_at(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                          double T, double eta, Exec exec) {
  FeasibilityProbe pr;
  pr.T = T;
  pr.eta_star = eta;
  pr.required_bandwidth = kInf;
  pr.eta_domain = eta_domain(scenario, coeffs, T);
  if (!pr.eta_domain || !(eta > pr.eta_domain->lo && eta < pr.eta_domain->hi)) return pr;
  pr.required_bandwidth = required_bandwidth(scenario, coeffs, T, eta, exec);
  pr.feasible = pr.required_bandwidth <= scenario.total_bandwidth;
  return pr;
}

Allocation allocation_at(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                         const FeasibilityProbe& pr) {
  if (!pr.feasible) throw InfeasibleError("allocation_at: probe is infeasible");
  const std::size_t K = scenario.size();
  Allocation a;
  a.eta = pr.eta_star;
  a.t.resize(K);
  a.b.resize(K);
  a.f.resize(K);
  a.p.resize(K);
  double used = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    a.t[k] = transmit_time(scenario, coeffs, k, pr.T, pr.eta_star);
    a.b[k] = u_k(scenario, k, scenario.upload_bits / a.t[k]);
    a.f[k] = scenario.users[k].f_max;
    a.p[k] = scenario.users[k].p_max;
    used += a.b[k];
  }
  const double share = std::max(0.0, scenario.total_bandwidth - used) / static_cast<double>(K);
  for (auto& b : a.b) b += share;
  return a;
}

TimeSolution min_completion_time(const NetworkScenario& scenario,
                                 const IterationCoefficients& coeffs, const Options& options) {
  scenario.validate();
  int iters = 0;
  double t_hi = 1.0;
  auto best = probe(scenario, coeffs, t_hi, options.exec);
  while (!best.feasible) {
    t_hi *= 2.0;
    ++iters;
    if (t_hi > options.T_cap)
      throw InfeasibleError(fmt::format("min_completion_time: no feasible T below {:.3g} s",
                                        options.T_cap));
    best = probe(scenario, coeffs, t_hi, options.exec);
  }
  double t_lo = 0.0;
  while ((t_hi - t_lo) / t_hi > options.rel_tol) {
    ++iters;
    const double mid = 0.5 * (t_lo + t_hi);
    auto pr = probe(scenario, coeffs, mid, options.exec);
    if (pr.feasible) {
      t_hi = mid;
      best = std::move(pr);
    } else {
      t_lo = mid;
    }
  }
  TimeSolution out{t_hi, allocation_at(scenario, coeffs, best), best, iters};
  return out;
}

}  // namespace fedwire::time_opt
