#pragma once

// Alternating minimizer of total user energy under a completion-time budget.
// Step 1 fixes (b, f, p) and solves (t, eta): transmit at minimum time and
// pick eta by Dinkelbach. Step 2 fixes (t, eta) and solves f in closed form
// and (b, p) from the KKT system of the bandwidth-sharing problem.

#include <optional>
#include <span>
#include <vector>

#include "fedwire/exec.hpp"
#include "fedwire/model.hpp"
#include "fedwire/numerics.hpp"
#include "fedwire/report.hpp"

namespace fedwire::energy_opt {

struct EtaInterval {
  double lo;
  double hi;
};

struct Step1Problem {
  double alpha1;  ///< a sum_k kappa A_k f_k^2
  double alpha2;  ///< a sum_k t_k^min p_k
  std::vector<double> t_min;
  std::vector<EtaInterval> eta_bounds;  ///< per user
  EtaInterval eta_range;                ///< intersection
  double T;
};

struct Step1Result {
  std::vector<double> t;
  double eta;
  double objective;
  int dinkelbach_iterations;
  Step1Problem problem;
};

struct KktState {
  double mu;  ///< dual price of bandwidth; +inf when every user sits at b_min
  std::vector<double> b_min;
  std::vector<double> b;
  std::vector<double> p;
};

struct Step2Result {
  std::vector<double> b;
  std::vector<double> f;
  std::vector<double> p;
  KktState kkt;
};

/// s / r_k; +inf for users with zero rate.
std::vector<double> t_min(const NetworkScenario& scenario, std::span<const double> b,
                          std::span<const double> p);

/// beta_k(eta) = (1 - eta) T / a + A_k log2(eta) / f_k: the transmit time
/// left to user k inside the budget at accuracy eta and frequency f_k.
double beta(const IterationCoefficients& coeffs, std::size_t k, double f_k, double T, double eta);

/// Interval of eta on which beta_k(eta) >= t_min_k; nullopt when empty.
std::optional<EtaInterval> eta_bounds_user(const IterationCoefficients& coeffs, std::size_t k,
                                           double f_k, double T, double t_min_k);

/// Intersection over users; nullopt when some user or the intersection is empty.
std::optional<EtaInterval> eta_bounds(const IterationCoefficients& coeffs,
                                      const NetworkScenario& scenario, double T,
                                      std::span<const double> f, std::span<const double> t_min);

Step1Result solve_step1(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                        double T, std::span<const double> b, std::span<const double> f,
                        std::span<const double> p, EtaRange eta_range = {},
                        const numerics::Tolerance& tol = {});

/// f_k = a A_k log2(1/eta) / (T(1 - eta) - a t_k): the slowest clock that
/// still meets the budget.
std::vector<double> optimal_frequency(const NetworkScenario& scenario,
                                      const IterationCoefficients& coeffs, double T,
                                      std::span<const double> t, double eta);

/// Minimum power delivering s bits in time t over bandwidth b.
double min_power(const UserParams& user, double noise_psd, double bits, double t, double b);

/// Bandwidth at which min_power reaches p_max. Throws DomainError when even
/// unlimited bandwidth cannot deliver s bits in t_k at p_max.
std::vector<double> b_min(const NetworkScenario& scenario, std::span<const double> t);
double b_min_user(const NetworkScenario& scenario, std::size_t k, double t_k);

/// Stationary bandwidth of the Lagrangian at price mu.
double b_of_mu_user(const NetworkScenario& scenario, std::size_t k, double t_k, double mu);
std::vector<double> b_of_mu(const NetworkScenario& scenario, std::span<const double> t, double mu,
                            Exec exec = Exec::serial);

/// Derivative of the Lagrangian in b_k (the stationarity residual).
double lagrangian_slope(const NetworkScenario& scenario, std::size_t k, double t_k, double b,
                        double mu);

/// sum_k max(b_k(mu), b_min_k)
double bandwidth_demand(const NetworkScenario& scenario, std::span<const double> t,
                        std::span<const double> b_min, double mu, Exec exec = Exec::serial);

/// Optimal (b, p) for fixed t: sum_k t_k p_k under the shared bandwidth.
KktState allocate_bandwidth(const NetworkScenario& scenario, std::span<const double> t,
                            Exec exec = Exec::serial);

Step2Result solve_step2(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                        double T, std::span<const double> t, double eta,
                        Exec exec = Exec::serial);

/// Energy minimum at a fixed eta. With eta fixed the rest is jointly convex
/// in (t_k, b_k): f_k = W_k / (R - t_k) spends whatever the upload leaves of
/// the round, a price mu on the shared band gives b_k(t_k) in closed form,
/// t_k is a 1-D convex search and mu the root of the band constraint.
/// nullopt when eta leaves some user no room or the band cannot hold the
/// power-capped demand. A non-empty fixed_b pins the bandwidths instead.
struct FixedEtaSolution {
  Allocation allocation;
  double energy;
  double mu;
};
std::optional<FixedEtaSolution> solve_fixed_eta(const NetworkScenario& scenario,
                                                const IterationCoefficients& coeffs, double T,
                                                double eta, double mu_hint = 0.0,
                                                Exec exec = Exec::serial,
                                                std::span<const double> fixed_b = {});

/// Best solve_fixed_eta over the feasible part of eta_range (grid scan, then
/// golden section around the best cell). nullopt when no eta is feasible.
std::optional<FixedEtaSolution> optimize_eta(const NetworkScenario& scenario,
                                             const IterationCoefficients& coeffs,
                                             EtaRange eta_range, double T,
                                             Exec exec = Exec::serial,
                                             std::span<const double> fixed_b = {});

struct Options {
  double tol = 1e-8;
  int max_iter = 100;
  Exec exec = Exec::serial;
  numerics::Tolerance scalar{};
};

struct EnergySolution {
  Allocation allocation;
  SolveReport report;
};

/// Alternates solve_step1 / solve_step2 from a feasible start. The recorded
/// objective trace is non-increasing; an iterate that would raise the
/// objective (rounding at a fixed point) ends the loop instead.
EnergySolution minimize_energy(const NetworkScenario& scenario, const FlParams& fl, double T,
                               const Allocation& init, const Options& options = {});

/// Same loop on explicit coefficients, for callers that rescale a.
EnergySolution minimize_energy(const NetworkScenario& scenario,
                               const IterationCoefficients& coeffs, EtaRange eta_range, double T,
                               const Allocation& init, const Options& options = {});

}  // namespace fedwire::energy_opt
