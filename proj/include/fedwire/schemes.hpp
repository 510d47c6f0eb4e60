#pragma once

// Baselines compared against the proposed allocator: equal bandwidth
// (EB-FDMA), fixed eta = 1/2 (FE-FDMA), sequential full-band uploads (TDMA)
// and random user selection (RS). Every solver returns a SolveReport.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedwire/energy_opt.hpp"
#include "fedwire/exec.hpp"
#include "fedwire/model.hpp"
#include "fedwire/report.hpp"

namespace fedwire::schemes {

enum class SchemeKind { proposed, eb_fdma, fe_fdma, tdma, rs };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::proposed;
  int selected_count = 0;  ///< rs only; 0 means K/2
  std::uint64_t seed = 0;  ///< rs only
};

std::string_view to_string(SchemeKind kind);
/// "proposed", "eb_fdma", "fe_fdma", "tdma", "rs" (dashes accepted); throws InputError.
SchemeKind parse_scheme(std::string_view name);

struct RsOptions {
  int selected_count = 0;  ///< 0 means K/2
  std::uint64_t seed = 0;
  int reps = 1;             ///< Monte Carlo repetitions
  int sampled_rounds = 16;  ///< subsets drawn per repetition
  Exec exec = Exec::serial;
};

/// T* for each scheme under its own constraint set.
double min_time_proposed(const NetworkScenario& scenario, const FlParams& fl);
double min_time_eb_fdma(const NetworkScenario& scenario, const FlParams& fl);
double min_time_fe_fdma(const NetworkScenario& scenario, const FlParams& fl);
double min_time_tdma(const NetworkScenario& scenario, const FlParams& fl);
double min_time_rs(const NetworkScenario& scenario, const FlParams& fl, const RsOptions& rs);

/// Best of energy_opt runs from several feasible seeds (the T* allocation,
/// the time_opt allocation at T, the equal-split full-power point), finished
/// by energy_opt::optimize_eta when that is cheaper. Throws InfeasibleError
/// (with T* in the message) when T < T*.
SolveReport solve_proposed(const NetworkScenario& scenario, const FlParams& fl, double T,
                           const energy_opt::Options& options = {});
SolveReport solve_eb_fdma(const NetworkScenario& scenario, const FlParams& fl, double T,
                          const energy_opt::Options& options = {});
SolveReport solve_fe_fdma(const NetworkScenario& scenario, const FlParams& fl, double T,
                          const energy_opt::Options& options = {});
SolveReport solve_tdma(const NetworkScenario& scenario, const FlParams& fl, double T);
SolveReport solve_rs(const NetworkScenario& scenario, const FlParams& fl, double T,
                     const RsOptions& rs);

/// Constraint check under the TDMA model: every b_k may equal B, and one
/// round lasts max_k(computation) + sum_k t_k.
std::vector<Constraint> check_feasible_tdma(const NetworkScenario& scenario,
                                            const IterationCoefficients& coeffs,
                                            const Allocation& alloc, double T,
                                            double slack = model::kDefaultSlack);

/// Per-round TDMA completion I0 (max_k c_k/f_k + sum_k t_k).
double tdma_completion(const NetworkScenario& scenario, const IterationCoefficients& coeffs,
                       const Allocation& alloc);

/// Dispatch on the spec; RS uses spec.selected_count/seed with default options.
double min_time(const NetworkScenario& scenario, const FlParams& fl, const SchemeSpec& spec);
SolveReport solve(const NetworkScenario& scenario, const FlParams& fl, double T,
                  const SchemeSpec& spec);

}  // namespace fedwire::schemes
