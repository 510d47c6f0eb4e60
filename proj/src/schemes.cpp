#include "fedwire/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>

#include <fmt/format.h>

#include "fedwire/error.hpp"
#include "fedwire/numerics.hpp"
#include "fedwire/time_opt.hpp"

namespace fedwire::schemes {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEtaLo = 1e-9;
constexpr double kEtaHi = 1.0 - 1e-9;

// Grid scan, then golden section inside the bracketing cells of the best node.
template <typename Fn>
numerics::GridPoint scan_min(Fn&& fn, double lo, double hi, int n = 128) {
  if (!(lo < hi)) return {lo, fn(lo)};
  const double step = (hi - lo) / (n - 1);
  int best_i = 0;
  double best_v = kInf;
  for (int i = 0; i < n; ++i) {
    const double x = i == n - 1 ? hi : lo + i * step;
    const double v = fn(x);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  const double a = lo + std::max(0, best_i - 1) * step;
  const double b = std::min(hi, lo + std::min(n - 1, best_i + 1) * step);
  auto g = numerics::golden_min(fn, a, b, 1e-13, 200);
  const double x_grid = best_i == n - 1 ? hi : lo + best_i * step;
  if (best_v < g.value) g = {x_grid, best_v};
  return g;
}

std::vector<double> rate_times(const NetworkScenario& sc, double bandwidth_each) {
  std::vector<double> t(sc.size());
  for (std::size_t k = 0; k < sc.size(); ++k)
    t[k] = sc.upload_bits /
           model::achievable_rate(sc.users[k], bandwidth_each, sc.users[k].p_max, sc.noise_psd);
  return t;
}

// Completion time with every user at full clock and fixed upload times.
double fdma_round_bound(const IterationCoefficients& co, const NetworkScenario& sc,
                        const std::vector<double>& t, double eta) {
  double worst = 0.0;
  for (std::size_t k = 0; k < sc.size(); ++k)
    worst = std::max(worst, co.A[k] * std::log2(1.0 / eta) / sc.users[k].f_max + t[k]);
  return co.a / (1.0 - eta) * worst;
}

std::string join(const std::vector<Constraint>& cs) {
  std::string s;
  for (auto c : cs) s += std::string(s.empty() ? "" : ",") + std::string(to_string(c));
  return s;
}

// Alternation with the same acceptance rule as the proposed loop: a
// candidate replaces the iterate only when feasible and strictly cheaper.
template <typename Step>
SolveReport alternate(const NetworkScenario& sc, const IterationCoefficients& co, double T,
                      Allocation cur, const energy_opt::Options& opt, std::string scheme,
                      Step&& step) {
  const auto bad = model::check_feasible(sc, co, cur, T);
  if (!bad.empty())
    throw InfeasibleError(fmt::format("{}: initial allocation violates {}", scheme, join(bad)));
  SolveReport rep;
  rep.scheme = std::move(scheme);
  rep.T = T;
  double energy = model::evaluate(sc, co, cur).total_energy;
  rep.objective_trace.push_back(energy);
  for (int it = 1; it <= opt.max_iter; ++it) {
    rep.iterations = it;
    Allocation next;
    try {
      next = step(cur, rep);
    } catch (const std::exception& e) {
      rep.events.push_back(fmt::format("iteration {}: step failed: {}", it, e.what()));
      break;
    }
    if (!model::check_feasible(sc, co, next, T).empty()) {
      rep.events.push_back(fmt::format("iteration {}: candidate infeasible, kept previous", it));
      break;
    }
    const double e_next = model::evaluate(sc, co, next).total_energy;
    if (!(e_next < energy)) {
      rep.converged = true;
      break;
    }
    const double rel = (energy - e_next) / energy;
    cur = std::move(next);
    energy = e_next;
    rep.objective_trace.push_back(energy);
    if (rel < opt.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.allocation = cur;
  rep.breakdown = model::evaluate(sc, co, cur);
  rep.violations = model::check_feasible(sc, co, cur, T);
  return rep;
}

// Step 1 keeps t at its full-power minimum and step 2 pins f to the budget,
// so the alternation can stall in both t and eta. Every FDMA scheme finishes
// with the exact solve for its own restriction and keeps it when cheaper.
SolveReport keep_if_better(const NetworkScenario& sc, const IterationCoefficients& co, double T,
                           SolveReport rep, const std::optional<energy_opt::FixedEtaSolution>& s) {
  if (!s || !(s->energy < rep.breakdown.total_energy)) return rep;
  if (!model::check_feasible(sc, co, s->allocation, T).empty()) return rep;
  const auto e = model::evaluate(sc, co, s->allocation);
  if (!(e.total_energy < rep.breakdown.total_energy)) return rep;
  rep.allocation = s->allocation;
  rep.breakdown = e;
  rep.violations = {};
  rep.objective_trace.push_back(e.total_energy);
  rep.events.push_back(
      fmt::format("exact finish: eta {:.17g}, energy {:.17g}", s->allocation.eta, e.total_energy));
  return rep;
}

// The alternation with step 1's Dinkelbach replaced by a fixed eta, clamped into
// the feasible range (with an event) when the target falls outside.
SolveReport fixed_eta_alternation(const NetworkScenario& sc, const IterationCoefficients& co,
                                  EtaRange range, double T, double target, const Allocation& init,
                                  const energy_opt::Options& options, std::string scheme) {
  return alternate(sc, co, T, init, options, scheme, [&](const Allocation& cur, SolveReport& rep) {
    const auto t = energy_opt::t_min(sc, cur.b, cur.p);
    auto bounds = energy_opt::eta_bounds(co, sc, T, cur.f, t);
    if (!bounds) throw InfeasibleError(scheme + ": empty eta range");
    const double lo = std::max(bounds->lo, range.lo);
    const double hi = std::min(bounds->hi, range.hi);
    if (lo > hi) throw InfeasibleError(scheme + ": empty eta range");
    // Bounds computed at the previous iterate can miss the target by rounding.
    const bool inside = target >= lo - 1e-12 && target <= hi + 1e-12;
    const double eta = inside ? target : std::clamp(target, lo, hi);
    if (!inside)
      rep.events.push_back(fmt::format("eta clamped from {} to {:.17g} (feasible range [{:.6g}, {:.6g}])",
                                       target, eta, lo, hi));
    const auto s2 = energy_opt::solve_step2(sc, co, T, t, eta, options.exec);
    return Allocation{t, s2.b, s2.f, s2.p, eta};
  });
}

double bisect_min_time(const std::function<bool(double)>& feasible) {
  double hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (hi > 1e12) throw InfeasibleError("no feasible completion time below 1e12 s");
  }
  double lo = 0.0;
  while ((hi - lo) / hi > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---- TDMA ----

struct TdmaRound {
  double tau = 0.0;
  std::vector<double> t, p;
  double energy = kInf;  ///< per round
};

struct TdmaModel {
  const NetworkScenario& sc;
  const IterationCoefficients& co;
  std::vector<double> t_lo;  ///< full band at p_max
  double A_over_f = 0.0;     ///< max_k A_k / f_max_k

  TdmaModel(const NetworkScenario& s, const IterationCoefficients& c) : sc(s), co(c) {
    t_lo = rate_times(sc, sc.total_bandwidth);
    for (std::size_t k = 0; k < sc.size(); ++k)
      A_over_f = std::max(A_over_f, co.A[k] / sc.users[k].f_max);
  }

  double tx_power(std::size_t k, double t) const {
    const double B = sc.total_bandwidth;
    return sc.noise_psd * B / sc.users[k].channel_gain * std::expm1(kLn2 * sc.upload_bits / (t * B));
  }

  // Split the round budget R between the shared computation window tau and
  // the upload slots with one price lambda on the sum.
  TdmaRound solve_round(double eta, double T) const {
    const double B = sc.total_bandwidth;
    const double R = T * (1.0 - eta) / co.a;
    const double L = std::log2(1.0 / eta);
    double c3 = 0.0;
    for (double A : co.A) c3 += std::pow(A * L, 3);
    const double tau_min = A_over_f * L;
    double floor_sum = tau_min;
    for (double t : t_lo) floor_sum += t;
    TdmaRound out;
    if (floor_sum > R) return out;

    const auto tau_of = [&](double lam) {
      return std::max(tau_min, std::cbrt(2.0 * sc.kappa * c3 / lam));
    };
    const auto t_of = [&](std::size_t k, double lam) {
      const double y = numerics::psi_inverse(lam * sc.users[k].channel_gain / (sc.noise_psd * B));
      return y > 0 ? std::max(t_lo[k], kLn2 * sc.upload_bits / (B * y)) : kInf;
    };
    const auto total = [&](double lam) {
      double s = tau_of(lam);
      for (std::size_t k = 0; k < sc.size(); ++k) s += t_of(k, lam);
      return s;
    };
    // Every slot sits at its floor once lambda passes these values.
    double lam_hi = tau_min > 0 ? 2.0 * sc.kappa * c3 / std::pow(tau_min, 3) : 1.0;
    for (std::size_t k = 0; k < sc.size(); ++k) {
      const double y = kLn2 * sc.upload_bits / (B * t_lo[k]);
      lam_hi = std::max(lam_hi, sc.noise_psd * B / sc.users[k].channel_gain * numerics::psi(y));
    }
    lam_hi *= 1.0 + 1e-12;
    double lam = lam_hi;
    if (total(lam_hi) < R) {
      double lam_lo = lam_hi;
      for (int i = 0; i < 2000 && total(lam_lo) <= R; ++i) lam_lo *= 0.25;
      const auto excess = [&](double log_lam) { return total(std::exp(log_lam)) - R; };
      const auto br = numerics::bisect_bracket(excess, std::log(lam_lo), std::log(lam_hi),
                                               numerics::Tolerance{1e-15, 1e-15, 400});
      lam = std::exp(br.f_hi <= 0 ? br.hi : br.lo);
    }
    out.tau = tau_of(lam);
    out.t.resize(sc.size());
    out.p.resize(sc.size());
    double e = 0.0;
    for (std::size_t k = 0; k < sc.size(); ++k) {
      out.t[k] = t_of(k, lam);
      out.p[k] = std::min(tx_power(k, out.t[k]), sc.users[k].p_max);
      e += sc.kappa * co.A[k] * L * std::pow(co.A[k] * L / out.tau, 2) + out.t[k] * out.p[k];
    }
    out.energy = e;
    return out;
  }

  std::optional<numerics::Interval> eta_range(double T) const {
    double floor_sum = 0.0;
    for (double t : t_lo) floor_sum += t;
    const double peak = co.a * A_over_f / (kLn2 * T);
    if (!(peak < 1.0)) return std::nullopt;
    const auto slack = [&](double eta) {
      return (1.0 - eta) * T / co.a + A_over_f * std::log2(eta);
    };
    return numerics::concave_superlevel(slack, 0.0, peak, 1.0, floor_sum);
  }
};

std::vector<std::size_t> draw_subset(std::mt19937_64& rng, std::size_t K, std::size_t m) {
  std::vector<std::size_t> idx(K);
  for (std::size_t i = 0; i < K; ++i) idx[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, K - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct RsDraw {
  NetworkScenario sub;
  IterationCoefficients coeffs;
  std::vector<std::size_t> users;
};

std::vector<RsDraw> rs_draws(const NetworkScenario& sc, const FlParams& fl, const RsOptions& rs) {
  const std::size_t K = sc.size();
  const std::size_t m = rs.selected_count > 0 ? static_cast<std::size_t>(rs.selected_count)
                                              : std::max<std::size_t>(1, K / 2);
  if (m > K) throw DomainError("rs: selected_count exceeds K");
  if (rs.reps < 1 || rs.sampled_rounds < 1) throw DomainError("rs: reps and sampled_rounds must be >= 1");
  const auto full = IterationCoefficients::from(fl, sc);
  std::mt19937_64 rng(rs.seed);
  std::vector<RsDraw> draws;
  for (int r = 0; r < rs.reps * rs.sampled_rounds; ++r) {
    RsDraw d;
    d.users = draw_subset(rng, K, m);
    d.sub = sc;
    d.sub.users.clear();
    d.coeffs.v = full.v;
    // Each user contributes to a fraction m/K of the rounds, so reaching the
    // same global accuracy takes K/m times as many rounds.
    d.coeffs.a = full.a * static_cast<double>(K) / static_cast<double>(m);
    for (auto k : d.users) {
      d.sub.users.push_back(sc.users[k]);
      d.coeffs.A.push_back(full.A[k]);
    }
    draws.push_back(std::move(d));
  }
  return draws;
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::proposed: return "proposed";
    case SchemeKind::eb_fdma: return "eb_fdma";
    case SchemeKind::fe_fdma: return "fe_fdma";
    case SchemeKind::tdma: return "tdma";
    case SchemeKind::rs: return "rs";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto k : {SchemeKind::proposed, SchemeKind::eb_fdma, SchemeKind::fe_fdma, SchemeKind::tdma,
                 SchemeKind::rs})
    if (s == to_string(k)) return k;
  throw InputError(fmt::format("unknown scheme '{}'", name));
}

// ---- proposed ----

double min_time_proposed(const NetworkScenario& scenario, const FlParams& fl) {
  return time_opt::min_completion_time(scenario, IterationCoefficients::from(fl, scenario)).T_star;
}

namespace {
std::pair<double, double> eb_min_time(const NetworkScenario& sc, const IterationCoefficients& co);
Allocation eb_seed(const NetworkScenario& sc, double eta);
}  // namespace

namespace {

// The alternation settles eta and the clocks early, so the seed matters. Try
// the T* allocation, the time_opt point at T and the equal-split full-power
// point, keep the lowest energy, then run the eta search.
SolveReport proposed_multistart(const NetworkScenario& sc, const IterationCoefficients& co,
                                EtaRange eta_range, double T,
                                const time_opt::FeasibilityProbe& pr,
                                const energy_opt::Options& options) {
  const auto fastest = time_opt::min_completion_time(sc, co);
  std::vector<Allocation> seeds;
  seeds.push_back(fastest.allocation);
  seeds.push_back(time_opt::allocation_at(sc, co, pr));
  seeds.push_back(eb_seed(sc, eb_min_time(sc, co).second));
  std::optional<SolveReport> best;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!model::check_feasible(sc, co, seeds[i], T).empty()) continue;
    auto rep = energy_opt::minimize_energy(sc, co, eta_range, T, seeds[i], options).report;
    if (!best || rep.breakdown.total_energy < best->breakdown.total_energy) {
      best = std::move(rep);
      best_i = i;
    }
  }
  if (!best) throw InfeasibleError("proposed: no feasible starting point");
  best = keep_if_better(sc, co, T, std::move(*best),
                        energy_opt::optimize_eta(sc, co, eta_range, T, options.exec));
  best->events.push_back(fmt::format("best of {} starts: start {}", seeds.size(), best_i));
  best->T_star = fastest.T_star;
  return *best;
}

}  // namespace

SolveReport solve_proposed(const NetworkScenario& scenario, const FlParams& fl, double T,
                           const energy_opt::Options& options) {
  const auto co = IterationCoefficients::from(fl, scenario);
  const auto pr = time_opt::probe(scenario, co, T, options.exec);
  if (!pr.feasible) {
    const double t_star = time_opt::min_completion_time(scenario, co).T_star;
    throw InfeasibleError(
        fmt::format("proposed: T = {:.6g} s is below the minimum completion time T* = {:.6g} s", T,
                    t_star));
  }
  return proposed_multistart(scenario, co, fl.local_accuracy_bounds, T, pr, options);
}

// ---- EB-FDMA ----

namespace {
std::pair<double, double> eb_min_time(const NetworkScenario& sc, const IterationCoefficients& co) {
  const auto t = rate_times(sc, sc.total_bandwidth / static_cast<double>(sc.size()));
  const auto best = scan_min([&](double eta) { return fdma_round_bound(co, sc, t, eta); }, kEtaLo,
                             kEtaHi, 256);
  return {best.value, best.x};
}

Allocation eb_seed(const NetworkScenario& sc, double eta) {
  const std::size_t K = sc.size();
  const double b_each = sc.total_bandwidth / static_cast<double>(K);
  Allocation a;
  a.eta = eta;
  a.t = rate_times(sc, b_each);
  a.b.assign(K, b_each);
  a.f.resize(K);
  a.p.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    a.f[k] = sc.users[k].f_max;
    a.p[k] = sc.users[k].p_max;
  }
  return a;
}
}  // namespace

double min_time_eb_fdma(const NetworkScenario& scenario, const FlParams& fl) {
  return eb_min_time(scenario, IterationCoefficients::from(fl, scenario)).first;
}

SolveReport solve_eb_fdma(const NetworkScenario& scenario, const FlParams& fl, double T,
                          const energy_opt::Options& options) {
  scenario.validate();
  const auto co = IterationCoefficients::from(fl, scenario);
  const std::size_t K = scenario.size();
  const double b_each = scenario.total_bandwidth / static_cast<double>(K);
  const auto [t_star, eta0] = eb_min_time(scenario, co);
  if (T < t_star)
    throw InfeasibleError(fmt::format(
        "eb_fdma: T = {:.6g} s is below the equal-bandwidth minimum T* = {:.6g} s", T, t_star));

  const Allocation init = eb_seed(scenario, eta0);

  auto rep = alternate(scenario, co, T, init, options, "eb_fdma",
                       [&](const Allocation& cur, SolveReport&) {
                         const auto s1 = energy_opt::solve_step1(scenario, co, T, cur.b, cur.f,
                                                                 cur.p, fl.local_accuracy_bounds,
                                                                 options.scalar);
                         Allocation next{s1.t, cur.b, {}, {}, s1.eta};
                         next.f = energy_opt::optimal_frequency(scenario, co, T, s1.t, s1.eta);
                         next.p.resize(K);
                         for (std::size_t k = 0; k < K; ++k) {
                           const auto& u = scenario.users[k];
                           const double p = energy_opt::min_power(u, scenario.noise_psd,
                                                                  scenario.upload_bits, s1.t[k], b_each);
                           if (p > u.p_max * (1 + model::kDefaultSlack))
                             throw InfeasibleError("eb_fdma: rate equality needs power above p_max");
                           next.p[k] = std::min(p, u.p_max);
                         }
                         return next;
                       });
  const std::vector<double> equal(K, b_each);
  rep = keep_if_better(scenario, co, T, std::move(rep),
                       energy_opt::optimize_eta(scenario, co, fl.local_accuracy_bounds, T,
                                                options.exec, equal));
  rep.T_star = t_star;
  return rep;
}

// ---- FE-FDMA ----

double min_time_fe_fdma(const NetworkScenario& scenario, const FlParams& fl) {
  scenario.validate();
  const auto co = IterationCoefficients::from(fl, scenario);
  return bisect_min_time(
      [&](double T) { return time_opt::probe_at(scenario, co, T, 0.5).feasible; });
}

SolveReport solve_fe_fdma(const NetworkScenario& scenario, const FlParams& fl, double T,
                          const energy_opt::Options& options) {
  scenario.validate();
  const auto co = IterationCoefficients::from(fl, scenario);
  const auto pr = time_opt::probe_at(scenario, co, T, 0.5, options.exec);
  if (!pr.feasible)
    throw InfeasibleError(fmt::format(
        "fe_fdma: T = {:.6g} s is below the fixed-accuracy minimum T* = {:.6g} s", T,
        min_time_fe_fdma(scenario, fl)));
  auto rep = fixed_eta_alternation(scenario, co, fl.local_accuracy_bounds, T, 0.5,
                                   time_opt::allocation_at(scenario, co, pr), options, "fe_fdma");
  const auto exact = energy_opt::solve_fixed_eta(scenario, co, T, rep.allocation.eta, 0.0, options.exec);
  return keep_if_better(scenario, co, T, std::move(rep), exact);
}

// ---- TDMA ----

double tdma_completion(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                       const Allocation& alloc) {
  const double L = std::log2(1.0 / alloc.eta);
  double tau = 0.0, tx = 0.0;
  for (std::size_t k = 0; k < scenario.size(); ++k) {
    tau = std::max(tau, alloc.f[k] > 0 ? coeffs.A[k] * L / alloc.f[k] : kInf);
    tx += alloc.t[k];
  }
  return coeffs.a / (1.0 - alloc.eta) * (tau + tx);
}

std::vector<Constraint> check_feasible_tdma(const NetworkScenario& scenario,
                                            const IterationCoefficients& coeffs,
                                            const Allocation& alloc, double T, double slack) {
  const std::size_t K = scenario.size();
  std::vector<Constraint> out;
  auto flag = [&](Constraint c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  if (alloc.t.size() != K || alloc.b.size() != K || alloc.f.size() != K || alloc.p.size() != K)
    return {Constraint::nonneg};
  const bool eta_ok = alloc.eta > 0 && alloc.eta < 1;
  if (!eta_ok) flag(Constraint::eta);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& u = scenario.users[k];
    if (alloc.t[k] < 0 || alloc.b[k] < 0 || alloc.f[k] < 0 || alloc.p[k] < 0) flag(Constraint::nonneg);
    if (alloc.f[k] > u.f_max * (1 + slack)) flag(Constraint::freq);
    if (alloc.p[k] > u.p_max * (1 + slack)) flag(Constraint::power);
    if (alloc.b[k] > scenario.total_bandwidth * (1 + slack)) flag(Constraint::bandwidth);
    const double bits = alloc.t[k] * model::achievable_rate(u, alloc.b[k], alloc.p[k], scenario.noise_psd);
    if (bits < scenario.upload_bits * (1 - slack)) flag(Constraint::data);
  }
  if (eta_ok && tdma_completion(scenario, coeffs, alloc) > T * (1 + slack)) flag(Constraint::latency);
  std::sort(out.begin(), out.end());
  return out;
}

double min_time_tdma(const NetworkScenario& scenario, const FlParams& fl) {
  scenario.validate();
  const auto co = IterationCoefficients::from(fl, scenario);
  const TdmaModel m(scenario, co);
  double tx = 0.0;
  for (double t : m.t_lo) tx += t;
  return scan_min(
             [&](double eta) {
               return co.a / (1.0 - eta) * (m.A_over_f * std::log2(1.0 / eta) + tx);
             },
             kEtaLo, kEtaHi, 256)
      .value;
}

SolveReport solve_tdma(const NetworkScenario& scenario, const FlParams& fl, double T) {
  scenario.validate();
  const auto co = IterationCoefficients::from(fl, scenario);
  const TdmaModel m(scenario, co);
  auto range = m.eta_range(T);
  if (range) {
    range->lo = std::max(range->lo, fl.local_accuracy_bounds.lo);
    range->hi = std::min(range->hi, fl.local_accuracy_bounds.hi);
  }
  if (!range || range->lo > range->hi)
    throw InfeasibleError(fmt::format(
        "tdma: T = {:.6g} s is below the sequential-upload minimum T* = {:.6g} s", T,
        min_time_tdma(scenario, fl)));

  int evals = 0;
  const auto energy_at = [&](double eta) {
    ++evals;
    return co.a / (1.0 - eta) * m.solve_round(eta, T).energy;
  };
  const auto best = scan_min(energy_at, range->lo, range->hi, 64);
  const double eta = best.x;
  const auto round = m.solve_round(eta, T);
  const double L = std::log2(1.0 / eta);

  Allocation a;
  a.eta = eta;
  a.t = round.t;
  a.p = round.p;
  a.b.assign(scenario.size(), scenario.total_bandwidth);
  a.f.resize(scenario.size());
  for (std::size_t k = 0; k < scenario.size(); ++k) a.f[k] = co.A[k] * L / round.tau;

  SolveReport rep;
  rep.scheme = "tdma";
  rep.T = T;
  rep.allocation = a;
  rep.breakdown = model::evaluate(scenario, co, a);
  const double done = tdma_completion(scenario, co, a);
  std::fill(rep.breakdown.per_user_completion.begin(), rep.breakdown.per_user_completion.end(), done);
  rep.objective_trace.push_back(rep.breakdown.total_energy);
  rep.iterations = evals;
  rep.converged = true;
  rep.violations = check_feasible_tdma(scenario, co, a, T);
  return rep;
}

// ---- RS ----

double min_time_rs(const NetworkScenario& scenario, const FlParams& fl, const RsOptions& rs) {
  scenario.validate();
  const auto draws = rs_draws(scenario, fl, rs);
  std::vector<double> ts(draws.size());
  for_each_index(rs.exec, draws.size(), [&](std::size_t i) {
    ts[i] = time_opt::min_completion_time(draws[i].sub, draws[i].coeffs).T_star;
  });
  double s = 0.0;
  for (double t : ts) s += t;
  return s / static_cast<double>(ts.size());
}

SolveReport solve_rs(const NetworkScenario& scenario, const FlParams& fl, double T,
                     const RsOptions& rs) {
  scenario.validate();
  const auto draws = rs_draws(scenario, fl, rs);
  std::vector<SolveReport> reps(draws.size());
  for_each_index(rs.exec, draws.size(), [&](std::size_t i) {
    const auto& d = draws[i];
    const auto pr = time_opt::probe(d.sub, d.coeffs, T);
    if (!pr.feasible)
      throw InfeasibleError(fmt::format(
          "rs: T = {:.6g} s is below the minimum completion time of draw {} (T* = {:.6g} s)", T, i,
          time_opt::min_completion_time(d.sub, d.coeffs).T_star));
    reps[i] = proposed_multistart(d.sub, d.coeffs, fl.local_accuracy_bounds, T, pr, {});
  });

  const std::size_t K = scenario.size();
  const double n = static_cast<double>(draws.size());
  SolveReport out;
  out.scheme = "rs";
  out.T = T;
  out.converged = true;
  auto& bd = out.breakdown;
  bd.comp_energy.assign(K, 0.0);
  bd.tx_energy.assign(K, 0.0);
  bd.per_user_completion.assign(K, 0.0);
  bd.local_iters.assign(K, 0.0);
  std::vector<double> picked(K, 0.0);
  double rounds = 0.0, t_star = 0.0;
  for (const auto& r : reps) {
    rounds += r.breakdown.global_iters;
    t_star += r.T_star.value_or(0.0);
  }
  bd.global_iters = rounds / n;
  out.T_star = t_star / n;

  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& r = reps[i];
    const double I0 = r.breakdown.global_iters;
    for (std::size_t j = 0; j < draws[i].users.size(); ++j) {
      const auto k = draws[i].users[j];
      // Scaled so that I0_mean * per-round energy reproduces the mean total.
      bd.comp_energy[k] += I0 * r.breakdown.comp_energy[j] / (n * bd.global_iters);
      bd.tx_energy[k] += I0 * r.breakdown.tx_energy[j] / (n * bd.global_iters);
      bd.per_user_completion[k] += r.breakdown.per_user_completion[j];
      bd.local_iters[k] += r.breakdown.local_iters[j];
      picked[k] += 1.0;
    }
    out.iterations += r.iterations;
    out.converged = out.converged && r.converged;
    for (auto c : r.violations)
      if (std::find(out.violations.begin(), out.violations.end(), c) == out.violations.end())
        out.violations.push_back(c);
    for (const auto& e : r.events) out.events.push_back(fmt::format("draw {}: {}", i, e));
  }
  double per_round = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (picked[k] > 0) {
      bd.per_user_completion[k] /= picked[k];
      bd.local_iters[k] /= picked[k];
    }
    per_round += bd.comp_energy[k] + bd.tx_energy[k];
  }
  bd.total_energy = bd.global_iters * per_round;
  std::sort(out.violations.begin(), out.violations.end());
  out.objective_trace.push_back(bd.total_energy);

  // Representative allocation: the first draw, unselected users idle.
  const auto& first = reps.front().allocation;
  out.allocation.eta = first.eta;
  out.allocation.t.assign(K, 0.0);
  out.allocation.b.assign(K, 0.0);
  out.allocation.f.assign(K, 0.0);
  out.allocation.p.assign(K, 0.0);
  for (std::size_t j = 0; j < draws.front().users.size(); ++j) {
    const auto k = draws.front().users[j];
    out.allocation.t[k] = first.t[j];
    out.allocation.b[k] = first.b[j];
    out.allocation.f[k] = first.f[j];
    out.allocation.p[k] = first.p[j];
  }
  return out;
}

// ---- dispatch ----

double min_time(const NetworkScenario& scenario, const FlParams& fl, const SchemeSpec& spec) {
  switch (spec.kind) {
    case SchemeKind::proposed: return min_time_proposed(scenario, fl);
    case SchemeKind::eb_fdma: return min_time_eb_fdma(scenario, fl);
    case SchemeKind::fe_fdma: return min_time_fe_fdma(scenario, fl);
    case SchemeKind::tdma: return min_time_tdma(scenario, fl);
    case SchemeKind::rs: {
      RsOptions o;
      o.selected_count = spec.selected_count;
      o.seed = spec.seed;
      return min_time_rs(scenario, fl, o);
    }
  }
  throw DomainError("min_time: unknown scheme");
}

SolveReport solve(const NetworkScenario& scenario, const FlParams& fl, double T,
                  const SchemeSpec& spec) {
  switch (spec.kind) {
    case SchemeKind::proposed: return solve_proposed(scenario, fl, T);
    case SchemeKind::eb_fdma: return solve_eb_fdma(scenario, fl, T);
    case SchemeKind::fe_fdma: return solve_fe_fdma(scenario, fl, T);
    case SchemeKind::tdma: return solve_tdma(scenario, fl, T);
    case SchemeKind::rs: {
      RsOptions o;
      o.selected_count = spec.selected_count;
      o.seed = spec.seed;
      return solve_rs(scenario, fl, T, o);
    }
  }
  throw DomainError("solve: unknown scheme");
}

}  // namespace fedwire::schemes
