// Acceptance checks, one per criterion. Prints "criterion N: PASS|FAIL ..."
// and exits nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedwire/energy_opt.hpp"
#include "fedwire/error.hpp"
#include "fedwire/fl_sim.hpp"
#include "fedwire/harness.hpp"
#include "fedwire/numerics.hpp"
#include "fedwire/schemes.hpp"
#include "fedwire/time_opt.hpp"
#include "test_support.hpp"

using namespace fedwire;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double second_diff(const std::function<double(double)>& f, double x, double h) {
  return f(x - h) - 2 * f(x) + f(x + h);
}

// ---- 1 ----
Outcome dinkelbach_optimality() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0, solver_time = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a1 = std::pow(10.0, 6 * U(rng) - 3), a2 = std::pow(10.0, 6 * U(rng) - 3);
    const double lo = 1e-3 + 0.5 * U(rng), hi = 0.5 + 0.499 * U(rng);
    const auto t0 = Clock::now();
    const auto r = numerics::dinkelbach(a1, a2, lo, hi);
    solver_time += seconds_since(t0);
    const auto g = numerics::grid_min(
        [&](double e) { return numerics::fractional_objective(a1, a2, e); }, lo, hi, 1000000);
    worst = std::max(worst, std::abs(r.objective - g.value) / g.value);
  }
  return {worst <= 1e-5 && solver_time < 5.0,
          fmt::format("worst relative gap to grid {:.3g} (limit 1e-5), solver time {:.3f} s (limit 5 s)",
                      worst, solver_time)};
}

// ---- 2 ----
// sum_k t_k p*_k(b_k) over bandwidth shares, refined around the best cell
double grid_tx_energy(const NetworkScenario& sc, const std::vector<double>& t) {
  const std::size_t K = sc.size();
  const double B = sc.total_bandwidth;
  auto cost = [&](const std::vector<double>& b) -> double {
    double e = 0;
    for (std::size_t k = 0; k < K; ++k) {
      if (b[k] <= 0) return INFINITY;
      const double p = energy_opt::min_power(sc.users[k], sc.noise_psd, sc.upload_bits, t[k], b[k]);
      if (p > sc.users[k].p_max) return INFINITY;
      e += t[k] * p;
    }
    return e;
  };
  const int n = K == 2 ? 4000 : 400;
  std::vector<double> lo(K - 1, 0.0), hi(K - 1, B);
  double best = INFINITY;
  std::vector<double> arg(K - 1, B / K);
  for (int level = 0; level < 5; ++level) {
    std::vector<double> step(K - 1);
    for (std::size_t j = 0; j + 1 < K; ++j) step[j] = (hi[j] - lo[j]) / n;
    std::vector<double> b(K);
    if (K == 2) {
      for (int i = 0; i <= n; ++i) {
        b[0] = lo[0] + i * step[0];
        b[1] = B - b[0];
        const double c = cost(b);
        if (c < best) best = c, arg[0] = b[0];
      }
    } else {
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          b[0] = lo[0] + i * step[0];
          b[1] = lo[1] + j * step[1];
          b[2] = B - b[0] - b[1];
          const double c = cost(b);
          if (c < best) best = c, arg[0] = b[0], arg[1] = b[1];
        }
    }
    for (std::size_t j = 0; j + 1 < K; ++j) {
      lo[j] = std::max(0.0, arg[j] - 3 * step[j]);
      hi[j] = std::min(B, arg[j] + 3 * step[j]);
    }
  }
  return best;
}

Outcome step2_oracle() {
  const auto fl = testing::fl_params();
  double worst_obj = 0, worst_rate = 0, worst_sum = 0, worst_stat = 0;
  for (int i = 0; i < 100; ++i) {
    const int K = 2 + i % 2;
    const auto sc = testing::random_scenario(2000 + i, K, 4.0 + (i % 7) * 2.0);
    const auto co = IterationCoefficients::from(fl, sc);
    const double T = (1.2 + 0.04 * i) * time_opt::min_completion_time(sc, co).T_star;
    const auto pr = time_opt::probe(sc, co, T);
    const auto alloc = time_opt::allocation_at(sc, co, pr);
    const auto s2 = energy_opt::solve_step2(sc, co, T, alloc.t, alloc.eta);
    double tx = 0, sum = 0;
    for (int k = 0; k < K; ++k) {
      tx += alloc.t[k] * s2.p[k];
      sum += s2.b[k];
      const double bits = alloc.t[k] * model::achievable_rate(sc.users[k], s2.b[k], s2.p[k], sc.noise_psd);
      worst_rate = std::max(worst_rate, std::abs(bits - sc.upload_bits) / sc.upload_bits);
      if (std::isfinite(s2.kkt.mu) && s2.b[k] > s2.kkt.b_min[k] * (1 + 1e-9))
        worst_stat = std::max(worst_stat, std::abs(energy_opt::lagrangian_slope(sc, k, alloc.t[k], s2.b[k], s2.kkt.mu)) /
                                              s2.kkt.mu);
    }
    worst_sum = std::max(worst_sum, std::abs(sum - sc.total_bandwidth) / sc.total_bandwidth);
    const double g = grid_tx_energy(sc, alloc.t);
    worst_obj = std::max(worst_obj, std::abs(tx - g) / g);
  }
  const bool ok = worst_obj <= 1e-4 && worst_rate <= 1e-9 && worst_sum <= 1e-9 && worst_stat <= 1e-9;
  return {ok, fmt::format("objective vs grid {:.3g} (1e-4); rate {:.3g}, bandwidth sum {:.3g}, "
                          "stationarity {:.3g} (1e-9 each)",
                          worst_obj, worst_rate, worst_sum, worst_stat)};
}

// ---- 3 ----
Outcome frequency_identity() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> U(0, 1);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int K = 1 + i % 4;
    NetworkScenario sc{std::vector<UserParams>(K, UserParams{1e-10, 2e4, 500, 1e30, 0.01}), 1e6, 1e-20,
                       1e4, 1e-28};
    IterationCoefficients co{std::pow(10.0, 3 * U(rng)), std::pow(10.0, 4 * U(rng)), {}};
    for (int k = 0; k < K; ++k) co.A.push_back(std::pow(10.0, 5 + 4 * U(rng)));
    const double eta = 0.01 + 0.98 * U(rng);
    std::vector<double> t(K);
    for (auto& x : t) x = std::pow(10.0, -3 + 3 * U(rng));
    const double tmax = *std::max_element(t.begin(), t.end());
    const double T = co.a * tmax / (1 - eta) * (1.01 + 10 * U(rng));
    const auto f = energy_opt::optimal_frequency(sc, co, T, t, eta);
    for (int k = 0; k < K; ++k) {
      const double lhs = co.a / (1 - eta) * (co.A[k] * std::log2(1 / eta) / f[k] + t[k]);
      worst = std::max(worst, std::abs(lhs - T) / T);
    }
  }
  return {worst <= 1e-9, fmt::format("worst relative residual of the latency constraint {:.3g} (1e-9)", worst)};
}

// ---- 4 ----
Outcome algorithm3_monotone() {
  const auto fl = testing::fl_params();
  int bad_traces = 0;
  double slowest_alt = 0, slowest_full = 0;
  const double factors[] = {1.1, 1.5, 2.0, 3.0, 5.0};
  for (int i = 0; i < 100; ++i) {
    const auto sc = testing::random_scenario(4000 + i, 50);
    const auto co = IterationCoefficients::from(fl, sc);
    auto t0 = Clock::now();
    const auto ts = time_opt::min_completion_time(sc, co);
    const double T = factors[i % 5] * ts.T_star;
    const auto sol = energy_opt::minimize_energy(sc, fl, T, ts.allocation);
    slowest_alt = std::max(slowest_alt, seconds_since(t0));
    const auto& tr = sol.report.objective_trace;
    for (std::size_t j = 1; j < tr.size(); ++j)
      if (tr[j] > tr[j - 1]) {
        ++bad_traces;
        break;
      }
    t0 = Clock::now();
    const auto full = schemes::solve_proposed(sc, fl, T);
    slowest_full = std::max(slowest_full, seconds_since(t0));
    const auto& ft = full.objective_trace;
    for (std::size_t j = 1; j < ft.size(); ++j)
      if (ft[j] > ft[j - 1]) {
        ++bad_traces;
        break;
      }
  }
  return {bad_traces == 0 && slowest_alt < 1.0 && slowest_full < 1.0,
          fmt::format("{} increasing traces; slowest single-start solve {:.3f} s, slowest multi-start "
                      "solve {:.3f} s (limit 1 s)",
                      bad_traces, slowest_alt, slowest_full)};
}

// ---- 5 ----
Outcome bisection_tightness() {
  const auto fl = testing::fl_params();
  int loose = 0, rejected = 0;
  for (int i = 0; i < 100; ++i) {
    const auto sc = testing::random_scenario(5000 + i, 50, 4.0 + (i % 6) * 2.0);
    const auto co = IterationCoefficients::from(fl, sc);
    const auto ts = time_opt::min_completion_time(sc, co);
    if (!time_opt::probe(sc, co, ts.T_star).feasible) ++loose;
    if (time_opt::probe(sc, co, ts.T_star * (1 - 10e-6)).feasible) ++loose;
    for (double f : {1.0, 1.7, 4.0}) {
      try {
        energy_opt::minimize_energy(sc, fl, f * ts.T_star, ts.allocation);
      } catch (const InfeasibleError&) {
        ++rejected;
      }
    }
  }
  return {loose == 0 && rejected == 0,
          fmt::format("{} bracket failures, {} rejected seeds over 100 scenarios", loose, rejected)};
}

// ---- 6 ----
Outcome convexity_witnesses() {
  const auto fl = testing::fl_params();
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> U(0, 1);
  std::map<std::string, int> bad;
  for (const char* n : {"beta concave", "p* convex decreasing", "z concave increasing",
                        "u convex increasing", "u(v) convex"})
    bad[n] = 0;
  for (int i = 0; i < 100; ++i) {
    const auto sc = testing::random_scenario(6000 + i, 1, 20 * U(rng));
    const auto co = IterationCoefficients::from(fl, sc);
    const double T = (1.2 + 4 * U(rng)) * time_opt::min_completion_time(sc, co).T_star;
    const double f = sc.users[0].f_max * (0.2 + 0.8 * U(rng));

    for (int j = 1; j <= 200; ++j) {
      const double e = 0.005 + 0.99 * j / 201.0, h = 1e-3;
      auto b = [&](double x) { return energy_opt::beta(co, 0, f, T, x); };
      if (second_diff(b, e, h) > 1e-8 * std::abs(b(e))) ++bad["beta concave"];
    }

    const double t = time_opt::time_floor(sc, 0) * (1.5 + 20 * U(rng));
    const double b0 = energy_opt::b_min_user(sc, 0, t);
    auto pstar = [&](double x) { return energy_opt::min_power(sc.users[0], sc.noise_psd, sc.upload_bits, t, x); };
    for (int j = 0; j < 200; ++j) {
      const double x = b0 * std::pow(1.04, j + 1), h = 1e-3 * x;
      if (second_diff(pstar, x, h) < -1e-8 * pstar(x) || pstar(x + h) >= pstar(x)) ++bad["p* convex decreasing"];
    }

    for (int j = 0; j < 200; ++j) {
      const double x = 10.0 * std::pow(10.0, 0.04 * j), h = 1e-3 * x;
      auto z = [&](double y) { return time_opt::z_k(sc, 0, y); };
      if (second_diff(z, x, h) > 1e-8 * z(x) || z(x + h) <= z(x)) ++bad["z concave increasing"];
      // u lives on [0, C); keep the stencil inside it
      const double C = sc.upload_bits / time_opt::time_floor(sc, 0);
      const double r = z(x), hr = std::min(1e-3 * r, 0.5 * (C - r));
      auto u = [&](double y) { return time_opt::u_k(sc, 0, y); };
      if (second_diff(u, r, hr) < -1e-8 * u(r) || u(r + hr) <= u(r)) ++bad["u convex increasing"];
    }

    const auto dom = time_opt::eta_domain(sc, co, T);
    if (!dom) {
      ++bad["u(v) convex"];
      continue;
    }
    const double w = dom->hi - dom->lo;
    auto g = [&](double e) { return time_opt::u_k(sc, 0, time_opt::v_k(sc, co, 0, T, e)); };
    for (int j = 1; j <= 200; ++j) {
      const double e = dom->lo + w * (0.01 + 0.98 * j / 201.0), h = 1e-3 * w;
      if (second_diff(g, e, h) < -1e-8 * g(e)) ++bad["u(v) convex"];
    }
  }
  int total = 0;
  std::string detail;
  for (const auto& [name, n] : bad) {
    total += n;
    detail += fmt::format("{}{}: {}", detail.empty() ? "" : ", ", name, n);
  }
  return {total == 0, "violations per witness (200 points x 100 cases): " + detail};
}

// ---- 7 ----
Outcome dane_bounds() {
  const double eta = 0.1;
  const std::vector<double> eps_list{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const NetworkScenario dummy{{{1e-10, 1e4, 100, 1e9, 0.1}}, 1e6, 1e-20, 1e4, 1e-28};
  int round_viol = 0, local_viol = 0, unreached = 0;
  std::vector<double> rel_gap(eps_list.size(), 0.0), abs_gap(eps_list.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pool = fl_sim::make_synthetic({600, 10, 0.1, fl_sim::LossKind::linear_regression, seed});
    const auto users = fl_sim::partition(pool, 6, {}, seed);
    const auto c = fl_sim::estimate_curvature(fl_sim::LossModel{}, users);
    fl_sim::DaneConfig cfg;
    cfg.fl = {c.lipschitz, c.strong_convexity, c.strong_convexity / c.lipschitz, 1.0 / c.lipschitz,
              eps_list.back()};
    cfg.local_stop = fl_sim::LocalStop::accuracy(eta);
    cfg.adaptive_xi = false;
    cfg.max_rounds = 5000;
    const auto tr = fl_sim::run_dane(fl_sim::LossModel{}, users, cfg);

    const auto co = IterationCoefficients::from(cfg.fl, dummy);
    const double local_bound = std::ceil(co.v * std::log2(1 / eta));
    for (const auto& r : tr.local_iters)
      for (int it : r)
        if (it > local_bound) ++local_viol;

    const double gap0 = tr.global_loss.front() - tr.optimal_loss;
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      auto fl = cfg.fl;
      fl.global_accuracy = eps_list[e];
      const double bound = std::ceil(IterationCoefficients::from(fl, dummy).a / (1 - eta));
      std::optional<int> rounds;
      for (std::size_t n = 0; n < tr.global_loss.size(); ++n)
        if (tr.global_loss[n] - tr.optimal_loss <= eps_list[e] * gap0) {
          rounds = static_cast<int>(n);
          break;
        }
      if (!rounds) {
        ++unreached;
        continue;
      }
      if (*rounds > bound) ++round_viol;
      rel_gap[e] += (1 - *rounds / bound) / 100;
      abs_gap[e] += (bound - *rounds) / 100;
    }
  }
  // the gap between bound and measurement should narrow as eps0 gets smaller
  bool trend = true;
  std::string gaps;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    if (e > 0 && rel_gap[e] > rel_gap[e - 1]) trend = false;
    gaps += fmt::format("{}{:g}: {:.5f} ({:.1f} rounds)", e ? ", " : "", eps_list[e], rel_gap[e], abs_gap[e]);
  }
  const bool bounds_ok = round_viol == 0 && local_viol == 0 && unreached == 0;
  return {bounds_ok && trend,
          fmt::format("round bound violations {}, local bound violations {}, unreached {}; bounds {}; "
                      "mean relative gap by eps0 [{}] {}",
                      round_viol, local_viol, unreached, bounds_ok ? "hold" : "broken", gaps,
                      trend ? "narrows" : "does not narrow as eps0 decreases")};
}

// ---- 8 ----
double fd_rel_error(const std::function<fl_sim::LossGrad(const fl_sim::Vec&)>& f, const fl_sim::Vec& x) {
  const auto g = f(x).grad;
  fl_sim::Vec fd(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
    fl_sim::Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    fd(j) = (f(xp).value - f(xm).value) / (2 * h);
  }
  return (g - fd).norm() / std::max(g.norm(), 1e-8);
}

Outcome gradient_checks() {
  using namespace fl_sim;
  std::mt19937_64 rng(808);
  std::normal_distribution<double> N(0, 1);
  auto data = [&](int n, int d, bool labels) {
    UserDataset u{Mat(n, d), Vec(n)};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) u.X(i, j) = N(rng);
      u.y(i) = labels ? (N(rng) > 0 ? 1.0 : -1.0) : N(rng);
    }
    return u;
  };
  auto vec = [&](int d, double s) {
    Vec v(d);
    for (int j = 0; j < d; ++j) v(j) = s * N(rng);
    return v;
  };
  std::map<std::string, double> worst;
  const std::pair<const char*, LossModel> models[] = {
      {"linear", LossModel{LossKind::linear_regression}},
      {"logistic", LossModel{LossKind::logistic_regression}},
      {"negated logistic + proximal", LossModel{LossKind::negated_logistic, 0.5}},
  };
  for (const auto& [name, base] : models) {
    const bool labels = base.kind != LossKind::linear_regression;
    for (int i = 0; i < 100; ++i) {
      const int d = 2 + i % 8;
      auto m = base;
      if (m.proximal_gamma > 0) m.anchor = vec(d, 1.0);
      const auto u = data(10 + i % 30, d, labels);
      const double e = fd_rel_error([&](const Vec& w) { return loss_and_grad(m, w, u); }, vec(d, 0.7));
      worst[name] = std::max(worst[name], e);

      std::vector<UserDataset> users{u, data(15, d, labels)};
      const Vec wn = vec(d, 0.5);
      const auto glob = global_loss_and_grad(m, users, wn);
      const auto loc = loss_and_grad(m, wn, users[0]);
      const auto G = make_surrogate(m, users[0], wn, glob.grad, loc.grad, 0.1 + 0.8 * (i % 10) / 10.0);
      const std::string sname = std::string("surrogate ") + name;
      worst[sname] = std::max(worst[sname], fd_rel_error([&](const Vec& h) { return G.eval(h); }, vec(d, 0.3)));
    }
  }
  double total = 0;
  std::string detail;
  for (const auto& [name, e] : worst) {
    total = std::max(total, e);
    detail += fmt::format("{}{}: {:.2g}", detail.empty() ? "" : ", ", name, e);
  }
  return {total <= 1e-6, "worst relative error vs central differences (1e-6): " + detail};
}

// ---- 9 ----
Outcome baseline_dominance() {
  const auto fl = testing::fl_params();
  using schemes::SchemeKind;
  const SchemeKind baselines[] = {SchemeKind::eb_fdma, SchemeKind::fe_fdma, SchemeKind::tdma, SchemeKind::rs};
  const auto t0 = Clock::now();
  int wins = 0;
  std::string losses;
  for (int i = 0; i < 20; ++i) {
    const auto sc = testing::random_scenario(9000 + i, 50);
    const std::uint64_t rs_seed = 9000 + i;
    double Tmax = 0;
    for (auto k : {SchemeKind::proposed, SchemeKind::eb_fdma, SchemeKind::fe_fdma, SchemeKind::tdma,
                   SchemeKind::rs})
      Tmax = std::max(Tmax, schemes::min_time(sc, fl, {k, 0, rs_seed}));
    const double T = 2.0 * Tmax;
    const double ep = schemes::solve(sc, fl, T, {SchemeKind::proposed, 0, 0}).breakdown.total_energy;
    bool ok = true;
    for (auto k : baselines) {
      const double eb = schemes::solve(sc, fl, T, {k, 0, rs_seed}).breakdown.total_energy;
      if (ep > eb * (1 + 1e-9)) {
        ok = false;
        losses += fmt::format(" scenario {} vs {} ({:.6g} > {:.6g})", i, schemes::to_string(k), ep, eb);
      }
    }
    wins += ok;
  }
  const double elapsed = seconds_since(t0);
  return {wins >= 19 && elapsed < 60.0,
          fmt::format("proposed lowest in {}/20 scenarios (need 19), suite time {:.1f} s (limit 60 s){}", wins,
                      elapsed, losses.empty() ? "" : ";" + losses)};
}

// ---- 10 ----
Outcome pmax_trend() {
  harness::SweepSpec spec;
  spec.variable = harness::SweepVariable::p_max;
  spec.values = {6, 8, 10, 12, 14};
  spec.runs = 50;
  spec.schemes = {schemes::SchemeKind::proposed, schemes::SchemeKind::eb_fdma, schemes::SchemeKind::fe_fdma,
                  schemes::SchemeKind::tdma, schemes::SchemeKind::rs};
  const auto res = harness::run_sweep(spec, harness::ScenarioConfig{}, harness::default_fl_params());
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  int failed = 0;
  for (const auto& r : res.rows) {
    if (!r.T_star) {
      ++failed;
      continue;
    }
    auto& a = acc[r.scheme][r.value];
    a.first += *r.T_star;
    a.second += 1;
  }
  auto mean = [&](const std::string& s, double v) { return acc[s][v].first / acc[s][v].second; };
  bool ok = failed == 0;
  std::string detail;
  for (auto& [scheme, by_value] : acc) {
    std::string row;
    double prev = INFINITY;
    for (double v : spec.values) {
      const double m = mean(scheme, v);
      if (m > prev) ok = false;
      prev = m;
      row += fmt::format(" {:.4g}", m);
    }
    detail += fmt::format("; {}:{}", scheme, row);
  }
  for (double v : spec.values)
    if (mean("proposed", v) > mean("tdma", v)) ok = false;
  return {ok, fmt::format("{} failed runs; mean T* (s) at p_max 6..14 dBm{}", failed, detail)};
}

// ---- 11 ----
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const char* cli = std::getenv("FEDWIRE_CLI");
  if (!cli) return {false, "FEDWIRE_CLI is not set"};
  const auto dir = std::filesystem::temp_directory_path() / "fedwire_acceptance_c11";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "config.json";
  std::ofstream(cfg) << R"({
  "scenario": {"K": 12},
  "sweep": {"variable": "p_max", "values": [8, 12], "runs": 4,
            "schemes": ["proposed", "eb_fdma", "tdma", "rs"], "T": 2, "T_relative": true}
})";
  for (const char* run : {"a", "b"}) {
    const auto cmd = fmt::format("\"{}\" sweep --config \"{}\" --seed 11 --out \"{}\" > /dev/null", cli,
                                 cfg.string(), (dir / run).string());
    if (std::system(cmd.c_str()) != 0) return {false, "sweep command failed: " + cmd};
  }
  std::string detail;
  bool ok = true;
  for (const char* f : {"sweep.csv", "sweep_aggregate.csv", "sweep_summary.json"}) {
    const auto a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += fmt::format("{}{} {} ({} bytes)", detail.empty() ? "" : ", ", f, same ? "identical" : "DIFFERS",
                          a.size());
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  app.add_option("--criterion", criterion, "criterion number 1-11")->required()->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::function<Outcome()> checks[] = {dinkelbach_optimality, step2_oracle,      frequency_identity,
                                             algorithm3_monotone,   bisection_tightness, convexity_witnesses,
                                             dane_bounds,           gradient_checks,   baseline_dominance,
                                             pmax_trend,            cli_determinism};
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = checks[criterion - 1]();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  fmt::print("criterion {}: {} {} [{:.1f} s]\n", criterion, out.pass ? "PASS" : "FAIL", out.detail,
             seconds_since(t0));
  return out.pass ? 0 : 1;
}
