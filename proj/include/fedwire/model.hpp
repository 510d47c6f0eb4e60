#pragma once

// Wireless FL system model: per-user parameters, learning constants, the
// decision vector and pure evaluation of energy, time and rate.
// Everything is strict SI (Hz, W, J, s, bits, cycles).

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fedwire {

struct UserParams {
  double channel_gain;       ///< linear power gain g_k
  double cycles_per_sample;  ///< C_k
  double samples;            ///< D_k
  double f_max;              ///< Hz
  double p_max;              ///< W
};

struct NetworkScenario {
  std::vector<UserParams> users;
  double total_bandwidth;  ///< B, Hz
  double noise_psd;        ///< N0, W/Hz
  double upload_bits;      ///< s
  double kappa;            ///< effective switched capacitance

  std::size_t size() const { return users.size(); }
  void validate() const;
};

struct EtaRange {
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
};

struct FlParams {
  double lipschitz;         ///< L
  double strong_convexity;  ///< gamma
  double xi;
  double step_size;        ///< delta
  double global_accuracy;  ///< eps0
  EtaRange local_accuracy_bounds{};

  void validate() const;
};

struct IterationCoefficients {
  double v;               ///< local iterations per log2(1/eta)
  double a;               ///< global iterations times (1 - eta)
  std::vector<double> A;  ///< cycles per log2(1/eta): v C_k D_k

  static IterationCoefficients from(const FlParams& fl, const NetworkScenario& scenario);
};

struct Allocation {
  std::vector<double> t;  ///< s
  std::vector<double> b;  ///< Hz
  std::vector<double> f;  ///< Hz
  std::vector<double> p;  ///< W
  double eta = 0.5;

  std::size_t size() const { return t.size(); }
};

struct EnergyTimeBreakdown {
  std::vector<double> comp_energy;
  std::vector<double> tx_energy;
  double total_energy = 0.0;
  std::vector<double> per_user_completion;
  double global_iters = 0.0;
  std::vector<double> local_iters;

  double total_comp() const;
  double total_tx() const;
  double completion_time() const;  ///< max_k T_k
};

enum class Constraint { latency, data, bandwidth, freq, power, eta, nonneg };

std::string_view to_string(Constraint c);

namespace model {

double local_iterations(double eta, const IterationCoefficients& coeffs);
double global_iterations(double eta, const IterationCoefficients& coeffs);

/// kappa I_k C_k D_k f^2
double comp_energy(const UserParams& user, double f, double iters, double kappa);

/// b log2(1 + g p / (N0 b)); zero when p == 0.
double achievable_rate(const UserParams& user, double b, double p, double noise_psd);

double tx_energy(double t, double p);

EnergyTimeBreakdown evaluate(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                             const Allocation& alloc);
EnergyTimeBreakdown evaluate(const NetworkScenario& scenario, const FlParams& fl,
                             const Allocation& alloc);

/// Relative slack default for feasibility checks at KKT points.
inline constexpr double kDefaultSlack = 1e-9;

/// Constraint identifiers violated by more than the relative slack.
std::vector<Constraint> check_feasible(const NetworkScenario& scenario,
                                       const IterationCoefficients& coeffs,
                                       const Allocation& alloc, double T,
                                       double slack = kDefaultSlack);
std::vector<Constraint> check_feasible(const NetworkScenario& scenario, const FlParams& fl,
                                       const Allocation& alloc, double T,
                                       double slack = kDefaultSlack);

}  // namespace model

namespace units {

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace units

}  // namespace fedwire
