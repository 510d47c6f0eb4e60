#pragma once

// Completion-time minimization. With f = f_max and p = p_max the question
// "is T attainable" reduces to a 1-D convex problem in eta: the bandwidth
// user k needs is u_k(v_k(eta)), and T is feasible iff the minimum over eta
// of the total fits in B. Bisection on T then gives T*.

#include <cstddef>
#include <optional>

#include "fedwire/exec.hpp"
#include "fedwire/model.hpp"
#include "fedwire/numerics.hpp"

namespace fedwire::time_opt {

struct FeasibilityProbe {
  double T = 0.0;
  double eta_star = 0.0;            ///< NaN when the domain is empty
  double required_bandwidth = 0.0;  ///< sum_k u_k(v_k(eta*)); +inf when the domain is empty
  bool feasible = false;
  std::optional<numerics::Interval> eta_domain;
};

/// phi_k(eta) = (1 - eta) T / a + A_k log2(eta) / f_max: time left for
/// uploading once user k computes at full clock.
double transmit_time(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                     std::size_t k, double T, double eta);

/// s N0 ln2 / (g p_max): upload time with unlimited bandwidth at p_max.
double time_floor(const NetworkScenario& scenario, std::size_t k);

/// Eta on which every user's transmit time exceeds its floor, so the
/// needed bandwidth is finite. nullopt when no such eta exists.
std::optional<numerics::Interval> eta_domain(const NetworkScenario& scenario,
                                             const IterationCoefficients& coeffs, double T);

/// Required rate s / phi_k(eta).
double v_k(const NetworkScenario& scenario, const IterationCoefficients& coeffs, std::size_t k,
           double T, double eta);
double v_k_prime(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                 std::size_t k, double T, double eta);

/// Rate at bandwidth b and p_max: b log2(1 + g p_max / (N0 b)).
double z_k(const NetworkScenario& scenario, std::size_t k, double b);
double z_k_prime(const NetworkScenario& scenario, std::size_t k, double b);

/// Smallest bandwidth with z_k(b) = rate (inverse of z_k).
double u_k(const NetworkScenario& scenario, std::size_t k, double rate);
double u_k_prime(const NetworkScenario& scenario, std::size_t k, double rate);

/// d/d eta of sum_k u_k(v_k(eta)).
double phi_slope(const NetworkScenario& scenario, const IterationCoefficients& coeffs, double T,
                 double eta, Exec exec = Exec::serial);

double required_bandwidth(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                          double T, double eta, Exec exec = Exec::serial);

/// Minimizer of the required bandwidth over the domain. Throws DomainError
/// when the domain is empty.
double eta_star(const NetworkScenario& scenario, const IterationCoefficients& coeffs, double T,
                Exec exec = Exec::serial);

FeasibilityProbe probe(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                       double T, Exec exec = Exec::serial);

/// Feasibility at a fixed eta instead of the optimal one.
FeasibilityProbe probe_at(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                          double T, double eta, Exec exec = Exec::serial);

struct Options {
  double rel_tol = 1e-6;  ///< stop at (T_max - T_min) / T_max <= rel_tol
  double T_cap = 1e12;    ///< give up doubling past this
  Exec exec = Exec::serial;
};

struct TimeSolution {
  double T_star;
  Allocation allocation;
  FeasibilityProbe probe;  ///< at T_star
  int iterations;
};

/// Allocation realizing the probe at T: f = f_max, p = p_max, t = phi(eta*),
/// b = u(v) with the leftover bandwidth shared equally.
Allocation allocation_at(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                         const FeasibilityProbe& pr);

TimeSolution min_completion_time(const NetworkScenario& scenario,
                                 const IterationCoefficients& coeffs, const Options& options = {});

}  // namespace fedwire::time_opt
