#include "fedwire/energy_opt.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "fedwire/error.hpp"
#include "fedwire/time_opt.hpp"

namespace fedwire::energy_opt {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClampSlack = 1e-9;

void check_sizes(const NetworkScenario& scenario, std::span<const double> v, const char* what) {
  if (v.size() != scenario.size())
    throw DomainError(fmt::format("{}: expected {} entries, got {}", what, scenario.size(), v.size()));
}

}  // namespace

std::vector<double> t_min(const NetworkScenario& scenario, std::span<const double> b,
                          std::span<const double> p) {
  check_sizes(scenario, b, "t_min(b)");
  check_sizes(scenario, p, "t_min(p)");
  std::vector<double> out(scenario.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double r = model::achievable_rate(scenario.users[k], b[k], p[k], scenario.noise_psd);
    out[k] = r > 0 ? scenario.upload_bits / r : kInf;
  }
  return out;
}

double beta(const IterationCoefficients& coeffs, std::size_t k, double f_k, double T, double eta) {
  return (1.0 - eta) * T / coeffs.a + coeffs.A[k] * std::log2(eta) / f_k;
}

std::optional<EtaInterval> eta_bounds_user(const IterationCoefficients& coeffs, std::size_t k,
                                           double f_k, double T, double t_min_k) {
  if (!(f_k > 0) || !(T > 0)) return std::nullopt;
  if (!std::isfinite(t_min_k)) return std::nullopt;
  const double peak = coeffs.a * coeffs.A[k] / (kLn2 * f_k * T);
  // beta is increasing on all of (0, 1) with beta(1) = 0 when peak >= 1.
  if (!(peak < 1.0)) return std::nullopt;
  const auto fn = [&](double eta) { return beta(coeffs, k, f_k, T, eta); };
  const auto iv = numerics::concave_superlevel(fn, 0.0, peak, 1.0, t_min_k);
  if (!iv) return std::nullopt;
  return EtaInterval{iv->lo, iv->hi};
}

namespace {

std::optional<EtaInterval> intersect(EtaInterval acc, EtaInterval next) {
  EtaInterval out{std::max(acc.lo, next.lo), std::min(acc.hi, next.hi)};
  if (out.lo <= out.hi) return out;
  // Tangent users can leave a rounding-sized gap between otherwise touching ends.
  if (out.lo - out.hi <= 1e-12 * out.lo) {
    const double mid = 0.5 * (out.lo + out.hi);
    return EtaInterval{mid, mid};
  }
  return std::nullopt;
}

}  // namespace

std::optional<EtaInterval> eta_bounds(const IterationCoefficients& coeffs,
                                      const NetworkScenario& scenario, double T,
                                      std::span<const double> f, std::span<const double> t_min) {
  check_sizes(scenario, f, "eta_bounds(f)");
  check_sizes(scenario, t_min, "eta_bounds(t_min)");
  std::optional<EtaInterval> acc = EtaInterval{0.0, 1.0};
  for (std::size_t k = 0; k < scenario.size() && acc; ++k) {
    const auto user = eta_bounds_user(coeffs, k, f[k], T, t_min[k]);
    if (!user) return std::nullopt;
    acc = intersect(*acc, *user);
  }
  return acc;
}

Step1Result solve_step1(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                        double T, std::span<const double> b, std::span<const double> f,
                        std::span<const double> p, EtaRange eta_range,
                        const numerics::Tolerance& tol) {
  check_sizes(scenario, f, "solve_step1(f)");
  Step1Problem prob;
  prob.T = T;
  prob.t_min = t_min(scenario, b, p);

  double cycles = 0.0, tx = 0.0;
  for (std::size_t k = 0; k < scenario.size(); ++k) {
    cycles += scenario.kappa * coeffs.A[k] * f[k] * f[k];
    if (p[k] > 0) tx += prob.t_min[k] * p[k];
  }
  prob.alpha1 = coeffs.a * cycles;
  prob.alpha2 = coeffs.a * tx;

  prob.eta_bounds.resize(scenario.size());
  std::optional<EtaInterval> acc = EtaInterval{eta_range.lo, eta_range.hi};
  for (std::size_t k = 0; k < scenario.size(); ++k) {
    const auto user = eta_bounds_user(coeffs, k, f[k], T, prob.t_min[k]);
    if (!user)
      throw InfeasibleError(fmt::format("step 1: user {} cannot meet T = {} at any eta", k, T));
    prob.eta_bounds[k] = *user;
    if (acc) acc = intersect(*acc, *user);
  }
  if (!acc) throw InfeasibleError(fmt::format("step 1: per-user eta ranges do not overlap at T = {}", T));
  prob.eta_range = *acc;

  const auto dk = numerics::dinkelbach(prob.alpha1, prob.alpha2, acc->lo, acc->hi, tol);
  Step1Result out;
  out.t = prob.t_min;
  out.eta = dk.eta;
  out.objective = dk.objective;
  out.dinkelbach_iterations = dk.iterations;
  out.problem = std::move(prob);
  return out;
}

std::vector<double> optimal_frequency(const NetworkScenario& scenario,
                                      const IterationCoefficients& coeffs, double T,
                                      std::span<const double> t, double eta) {
  check_sizes(scenario, t, "optimal_frequency(t)");
  if (!(eta > 0 && eta < 1)) throw DomainError("optimal_frequency: eta must lie in (0, 1)");
  std::vector<double> f(scenario.size());
  const double log_term = std::log2(1.0 / eta);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double denom = T * (1.0 - eta) - coeffs.a * t[k];
    if (!(denom > 0))
      throw InfeasibleError(fmt::format("optimal_frequency: user {} has no computation time left", k));
    const double fk = coeffs.a * coeffs.A[k] * log_term / denom;
    const double fmax = scenario.users[k].f_max;
    if (fk > fmax * (1.0 + kClampSlack))
      throw InfeasibleError(
          fmt::format("optimal_frequency: user {} needs {:.6g} Hz above f_max {:.6g}", k, fk, fmax));
    f[k] = std::min(fk, fmax);
  }
  return f;
}

double min_power(const UserParams& user, double noise_psd, double bits, double t, double b) {
  return noise_psd * b / user.channel_gain * std::expm1(kLn2 * bits / (t * b));
}

double b_min_user(const NetworkScenario& scenario, std::size_t k, double t_k) {
  // p*(b) = p_max is the rate equation b log2(1 + g p_max/(N0 b)) = s/t_k,
  // whose finite root is on the lower Lambert branch (see time_opt::u_k).
  try {
    return time_opt::u_k(scenario, k, scenario.upload_bits / t_k);
  } catch (const DomainError&) {
    throw DomainError(fmt::format(
        "b_min: user {} cannot deliver {} bits in {} s at p_max with any bandwidth", k,
        scenario.upload_bits, t_k));
  }
}

std::vector<double> b_min(const NetworkScenario& scenario, std::span<const double> t) {
  check_sizes(scenario, t, "b_min(t)");
  std::vector<double> out(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = b_min_user(scenario, k, t[k]);
  return out;
}

double b_of_mu_user(const NetworkScenario& scenario, std::size_t k, double t_k, double mu) {
  if (!(mu > 0)) throw DomainError("b_of_mu: mu must be positive");
  const auto& u = scenario.users[k];
  // d(t p*)/db = -(N0 t / g) psi(x), x = ln2 s/(t b); stationarity is psi(x) = mu g/(N0 t).
  const double x = numerics::psi_inverse(mu * u.channel_gain / (scenario.noise_psd * t_k));
  if (!(x > 0)) return kInf;
  return kLn2 * scenario.upload_bits / (t_k * x);
}

std::vector<double> b_of_mu(const NetworkScenario& scenario, std::span<const double> t, double mu,
                            Exec exec) {
  check_sizes(scenario, t, "b_of_mu(t)");
  std::vector<double> out(t.size());
  for_each_index(exec, t.size(), [&](std::size_t k) { out[k] = b_of_mu_user(scenario, k, t[k], mu); });
  return out;
}

double lagrangian_slope(const NetworkScenario& scenario, std::size_t k, double t_k, double b,
                        double mu) {
  const auto& u = scenario.users[k];
  const double x = kLn2 * scenario.upload_bits / (t_k * b);
  return -scenario.noise_psd * t_k / u.channel_gain * numerics::psi(x) + mu;
}

double bandwidth_demand(const NetworkScenario& scenario, std::span<const double> t,
                        std::span<const double> b_min, double mu, Exec exec) {
  const auto b = b_of_mu(scenario, t, mu, exec);
  double total = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) total += std::max(b[k], b_min[k]);
  return total;
}

KktState allocate_bandwidth(const NetworkScenario& scenario, std::span<const double> t, Exec exec) {
  check_sizes(scenario, t, "allocate_bandwidth(t)");
  const std::size_t K = scenario.size();
  const double B = scenario.total_bandwidth;
  KktState st;
  try {
    st.b_min = b_min(scenario, t);
  } catch (const DomainError& e) {
    throw InfeasibleError(e.what());
  }
  const double need = std::accumulate(st.b_min.begin(), st.b_min.end(), 0.0);
  if (need > B * (1.0 + kClampSlack))
    throw InfeasibleError(fmt::format("step 2: minimum bandwidth {:.6g} Hz exceeds B", need));

  if (need >= B) {
    st.mu = kInf;
    st.b = st.b_min;
  } else {
    // Seed the price from the equal split, then widen in log space until bracketed.
    double mu0 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& u = scenario.users[k];
      const double x = kLn2 * scenario.upload_bits / (t[k] * B / static_cast<double>(K));
      mu0 = std::max(mu0, scenario.noise_psd * t[k] / u.channel_gain * numerics::psi(x));
    }
    if (!(mu0 > 0) || !std::isfinite(mu0)) mu0 = 1.0;
    const auto excess = [&](double log_mu) {
      return bandwidth_demand(scenario, t, st.b_min, std::exp(log_mu), exec) - B;
    };
    double lo = std::log(mu0), hi = lo;
    int guard = 0;
    while (excess(hi) > 0 && guard++ < 400) hi += 2.0;
    guard = 0;
    while (excess(lo) <= 0 && guard++ < 400) lo -= 2.0;
    if (excess(hi) > 0 || excess(lo) <= 0)
      throw ConvergenceError("step 2: could not bracket the bandwidth price");
    const numerics::Tolerance tight{1e-15, 1e-15, 400};
    const auto br = numerics::bisect_bracket(excess, lo, hi, tight);
    // The upper end keeps the demand within B.
    st.mu = std::exp(br.f_hi <= 0 ? br.hi : br.lo);
    const auto bm = b_of_mu(scenario, t, st.mu, exec);
    st.b.resize(K);
    for (std::size_t k = 0; k < K; ++k) st.b[k] = std::max(bm[k], st.b_min[k]);
  }

  st.p.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& u = scenario.users[k];
    const double pk = min_power(u, scenario.noise_psd, scenario.upload_bits, t[k], st.b[k]);
    if (pk > u.p_max * (1.0 + kClampSlack))
      throw InfeasibleError(fmt::format("step 2: user {} needs power above p_max", k));
    st.p[k] = std::min(pk, u.p_max);
  }
  return st;
}

Step2Result solve_step2(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                        double T, std::span<const double> t, double eta, Exec exec) {
  Step2Result out;
  out.f = optimal_frequency(scenario, coeffs, T, t, eta);
  out.kkt = allocate_bandwidth(scenario, t, exec);
  out.b = out.kkt.b;
  out.p = out.kkt.p;
  return out;
}

EnergySolution minimize_energy(const NetworkScenario& scenario, const FlParams& fl, double T,
                               const Allocation& init, const Options& options) {
  scenario.validate();
  return minimize_energy(scenario, IterationCoefficients::from(fl, scenario),
                         fl.local_accuracy_bounds, T, init, options);
}

namespace {

struct PricedUser {
  double t, b, cost;  // cost leaves out mu b
};

double floor_time(const NetworkScenario& sc, std::size_t k) {
  const auto& u = sc.users[k];
  return sc.upload_bits * sc.noise_psd * kLn2 / (u.channel_gain * u.p_max);
}

// shortest upload at p_max: over bandwidth b, or with unlimited band when b <= 0
double upload_floor(const NetworkScenario& sc, std::size_t k, double b) {
  if (b > 0)
    return sc.upload_bits / model::achievable_rate(sc.users[k], b, sc.users[k].p_max, sc.noise_psd);
  return floor_time(sc, k) * (1 + 1e-9);
}

// One user's (t, b) at band price mu, or its t alone when b_fixed > 0. Above
// R - W/f_max the clock would pass f_max.
PricedUser price_user(const NetworkScenario& sc, std::size_t k, double W, double R, double mu,
                      double b_fixed) {
  const auto& u = sc.users[k];
  const double lo = upload_floor(sc, k, b_fixed), hi = R - W / u.f_max;
  const auto band = [&](double t) {
    if (b_fixed > 0) return b_fixed;
    const double b = b_of_mu_user(sc, k, t, mu);
    // the power cap binds only when the priced band would need more than p_max
    if (std::isfinite(b) && min_power(u, sc.noise_psd, sc.upload_bits, t, b) <= u.p_max) return b;
    return std::max(b, b_min_user(sc, k, t));
  };
  const auto cost = [&](double t, double b) {
    const double f = W / (R - t);
    return sc.kappa * W * f * f + t * std::min(min_power(u, sc.noise_psd, sc.upload_bits, t, b), u.p_max);
  };
  const auto h = [&](double t) {
    const double b = band(t);
    return cost(t, b) + (b_fixed > 0 ? 0.0 : mu * b);
  };
  auto m = boost::math::tools::brent_find_minima(h, lo, hi, 40);
  // brent stays inside the bracket; optima often sit on an end
  for (double end : {lo, hi}) {
    const double v = h(end);
    if (v <= m.second) m = {end, v};
  }
  const double b = band(m.first);
  return {m.first, b, cost(m.first, b)};
}

}  // namespace

std::optional<FixedEtaSolution> solve_fixed_eta(const NetworkScenario& scenario,
                                                const IterationCoefficients& coeffs, double T,
                                                double eta, double mu_hint, Exec exec,
                                                std::span<const double> fixed_b) {
  if (!(eta > 0 && eta < 1)) return std::nullopt;
  const std::size_t K = scenario.size();
  const bool pinned = !fixed_b.empty();
  if (pinned) check_sizes(scenario, fixed_b, "solve_fixed_eta(fixed_b)");
  const double R = (1.0 - eta) * T / coeffs.a;
  const double L = std::log2(1.0 / eta);
  std::vector<double> W(K), b_of(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    W[k] = coeffs.A[k] * L;
    if (pinned) b_of[k] = fixed_b[k];
    if (pinned && !(b_of[k] > 0)) return std::nullopt;
    if (!(R - W[k] / scenario.users[k].f_max > upload_floor(scenario, k, b_of[k]) * (1 + 1e-9)))
      return std::nullopt;
  }

  std::vector<PricedUser> users(K);
  const auto solve_at = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    for_each_index(exec, K, [&](std::size_t k) {
      users[k] = price_user(scenario, k, W[k], R, mu, b_of[k]);
    });
    double demand = 0.0;
    for (const auto& pu : users) demand += pu.b;
    return demand;
  };

  double mu_out = 0.0;
  if (pinned) {
    solve_at(0.0);
  } else {
    const double logB = std::log(scenario.total_bandwidth);
    const auto gap = [&](double log_mu) {
      const double d = solve_at(log_mu);
      return std::isfinite(d) ? std::log(d) - logB : 1e3;
    };
    // bracket the price: demand falls as mu grows
    double lo = std::log(mu_hint > 0 ? mu_hint : 1e-9), hi = lo;
    double g_lo = gap(lo), g_hi = g_lo;
    for (int i = 0; g_lo <= 0; ++i) {
      if (i == 60) return std::nullopt;
      hi = lo, g_hi = g_lo;
      lo -= 2.0;
      g_lo = gap(lo);
    }
    for (int i = 0; g_hi > 0; ++i) {
      if (i == 60) return std::nullopt;  // power caps alone overflow the band
      lo = hi, g_lo = g_hi;
      hi += 2.0;
      g_hi = gap(hi);
    }
    if (g_hi < 0) {
      boost::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(
          gap, lo, hi, g_lo, g_hi,
          [](double x, double y) { return std::abs(x - y) <= 1e-13 * std::max(1.0, std::abs(x)); },
          iters);
      hi = r.second;  // the side whose demand fits
    }
    if (gap(hi) > 0) return std::nullopt;
    mu_out = std::exp(hi);
  }

  FixedEtaSolution out{{std::vector<double>(K), std::vector<double>(K), std::vector<double>(K),
                        std::vector<double>(K), eta},
                       0.0, mu_out};
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& u = scenario.users[k];
    auto& a = out.allocation;
    a.t[k] = users[k].t;
    a.b[k] = users[k].b;
    a.f[k] = std::min(W[k] / (R - users[k].t), u.f_max);
    a.p[k] = std::min(min_power(u, scenario.noise_psd, scenario.upload_bits, a.t[k], a.b[k]), u.p_max);
    sum += users[k].cost;
  }
  out.energy = coeffs.a / (1.0 - eta) * sum;
  return out;
}

std::optional<FixedEtaSolution> optimize_eta(const NetworkScenario& scenario,
                                             const IterationCoefficients& coeffs,
                                             EtaRange eta_range, double T, Exec exec,
                                             std::span<const double> fixed_b) {
  const std::size_t K = scenario.size();
  // every user needs its fastest upload next to f_max compute
  std::vector<double> f_max(K), t_floor(K);
  for (std::size_t k = 0; k < K; ++k) {
    f_max[k] = scenario.users[k].f_max;
    t_floor[k] = upload_floor(scenario, k, fixed_b.empty() ? 0.0 : fixed_b[k]);
  }
  const auto window = eta_bounds(coeffs, scenario, T, f_max, t_floor);
  if (!window) return std::nullopt;
  const double lo = std::max(window->lo, eta_range.lo), hi = std::min(window->hi, eta_range.hi);
  if (!(lo < hi)) return std::nullopt;

  std::optional<FixedEtaSolution> best;
  double mu = 0.0;
  const auto energy_at = [&](double eta) {
    auto s = solve_fixed_eta(scenario, coeffs, T, eta, mu, exec, fixed_b);
    if (!s) return kInf;
    mu = s->mu;
    const double e = s->energy;
    if (!best || e < best->energy) best = std::move(s);
    return e;
  };
  constexpr int n = 12;
  const double step = (hi - lo) / n;
  int best_i = -1;
  double best_v = kInf;
  for (int i = 0; i < n; ++i) {
    const double v = energy_at(lo + (i + 0.5) * step);
    if (v < best_v) best_v = v, best_i = i;
  }
  if (best_i < 0) return std::nullopt;
  const double c = lo + (best_i + 0.5) * step;
  boost::math::tools::brent_find_minima(energy_at, std::max(lo, c - step), std::min(hi, c + step), 30);
  return best;
}

EnergySolution minimize_energy(const NetworkScenario& scenario,
                               const IterationCoefficients& coeffs, EtaRange eta_range, double T,
                               const Allocation& init, const Options& options) {
  const auto bad = model::check_feasible(scenario, coeffs, init, T);
  if (!bad.empty()) {
    std::string names;
    for (auto c : bad) names += std::string(names.empty() ? "" : ",") + std::string(to_string(c));
    throw InfeasibleError(fmt::format("minimize_energy: initial allocation violates {}", names));
  }

  EnergySolution sol;
  auto& rep = sol.report;
  rep.scheme = "proposed";
  rep.T = T;
  Allocation cur = init;
  double energy = model::evaluate(scenario, coeffs, cur).total_energy;
  rep.objective_trace.push_back(energy);

  for (int it = 1; it <= options.max_iter; ++it) {
    rep.iterations = it;
    Allocation next;
    try {
      const auto s1 = solve_step1(scenario, coeffs, T, cur.b, cur.f, cur.p,
                                  eta_range, options.scalar);
      const auto s2 = solve_step2(scenario, coeffs, T, s1.t, s1.eta, options.exec);
      next = Allocation{s1.t, s2.b, s2.f, s2.p, s1.eta};
    } catch (const std::exception& e) {
      rep.events.push_back(fmt::format("iteration {}: step failed: {}", it, e.what()));
      break;
    }
    if (!model::check_feasible(scenario, coeffs, next, T).empty()) {
      rep.events.push_back(fmt::format("iteration {}: candidate infeasible, kept previous", it));
      break;
    }
    const double e_next = model::evaluate(scenario, coeffs, next).total_energy;
    if (!(e_next < energy)) {
      rep.converged = true;
      break;
    }
    const double rel = (energy - e_next) / energy;
    cur = std::move(next);
    energy = e_next;
    rep.objective_trace.push_back(energy);
    if (rel < options.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.allocation = cur;
  rep.breakdown = model::evaluate(scenario, coeffs, cur);
  rep.violations = model::check_feasible(scenario, coeffs, cur, T);
  sol.allocation = cur;
  return sol;
}

}  // namespace fedwire::energy_opt
