#pragma once

// Scalar numerical primitives shared by the solvers: Lambert W, bracketed
// bisection, the Dinkelbach ratio minimizer and 1-D search helpers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedwire/error.hpp"

namespace fedwire::numerics {

struct Tolerance {
  double abs_tol = 1e-15;
  double rel_tol = 1e-9;
  int max_iter = 200;

  void validate() const;
};

/// Principal branch W0 on [-1/e, inf). Arguments within 1e-12 below the
/// branch point are clamped to it.
double lambert_w0(double x);

/// Lower branch W_{-1} on [-1/e, 0). Needed wherever w·e^w = x must pick
/// the root below -1 (minimal-bandwidth closed forms).
double lambert_wm1(double x);

/// psi(x) = (x - 1)e^x + 1, evaluated without cancellation near 0.
/// Increasing and convex on x >= 0 with psi(0) = 0.
double psi(double x);

/// Inverse of psi on m >= 0.
double psi_inverse(double m);

struct Bracket {
  double lo;
  double hi;
  double f_lo;
  double f_hi;
  int iterations;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

namespace detail {
inline bool same_sign(double a, double b) { return (a > 0 && b > 0) || (a < 0 && b < 0); }
}  // namespace detail

/// Bisection on a monotone fn. Keeps fn's sign at each end, so callers that
/// care about which side of the root they land on can pick lo or hi.
template <typename Fn>
Bracket bisect_bracket(Fn&& fn, double lo, double hi, const Tolerance& tol = {}) {
  tol.validate();
  if (!(lo <= hi)) throw DomainError("bisect: lo must not exceed hi");
  double f_lo = fn(lo);
  double f_hi = fn(hi);
  if (std::isnan(f_lo) || std::isnan(f_hi)) throw DomainError("bisect: NaN at bracket end");
  if (f_lo == 0.0) return {lo, lo, f_lo, f_lo, 0};
  if (f_hi == 0.0) return {hi, hi, f_hi, f_hi, 0};
  if (detail::same_sign(f_lo, f_hi)) throw BracketError("bisect: endpoints do not bracket a root");

  for (int it = 1; it <= tol.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return {lo, hi, f_lo, f_hi, it - 1};
    const double f_mid = fn(mid);
    if (f_mid == 0.0) return {mid, mid, f_mid, f_mid, it};
    if (detail::same_sign(f_mid, f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    if (hi - lo <= tol.abs_tol + tol.rel_tol * scale) return {lo, hi, f_lo, f_hi, it};
  }
  throw ConvergenceError("bisect: no convergence within max_iter");
}

template <typename Fn>
double bisect_root(Fn&& fn, double lo, double hi, const Tolerance& tol = {}) {
  return bisect_bracket(fn, lo, hi, tol).mid();
}

struct GridPoint {
  double x;
  double value;
};

/// Exhaustive scan of {lo + i(hi-lo)/(n-1)}. Test oracle and coarse seeding.
template <typename Fn>
GridPoint grid_min(Fn&& fn, double lo, double hi, std::int64_t n) {
  if (!(lo < hi) || n < 2) throw DomainError("grid_min: need lo < hi and n >= 2");
  GridPoint best{lo, fn(lo)};
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::int64_t i = 1; i < n; ++i) {
    const double x = (i == n - 1) ? hi : lo + static_cast<double>(i) * step;
    const double v = fn(x);
    if (v < best.value) best = {x, v};
  }
  return best;
}

/// Golden-section search for a unimodal fn on [lo, hi].
template <typename Fn>
GridPoint golden_min(Fn&& fn, double lo, double hi, double x_tol = 1e-12, int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < max_iter && (b - a) > x_tol * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  GridPoint best = fc <= fd ? GridPoint{c, fc} : GridPoint{d, fd};
  const double fa = fn(lo), fb = fn(hi);
  if (fa < best.value) best = {lo, fa};
  if (fb < best.value) best = {hi, fb};
  return best;
}

struct Interval {
  double lo;
  double hi;
};

/// Closed interval on which a concave fn (maximized at peak inside
/// [lo_limit, hi_limit]) stays >= level; nullopt when fn(peak) < level.
/// Each end is returned on the fn >= level side of its bisection bracket.
template <typename Fn>
std::optional<Interval> concave_superlevel(Fn&& fn, double lo_limit, double peak, double hi_limit,
                                           double level) {
  if (!(fn(peak) >= level)) return std::nullopt;
  const Tolerance tight{1e-300, 2.0 * std::numeric_limits<double>::epsilon(), 4000};
  const auto gap = [&](double x) { return fn(x) - level; };

  double lower = lo_limit;
  if (gap(lo_limit) < 0) {
    double probe = peak;
    for (int j = 0; j < 1100 && gap(probe) >= 0; ++j) probe = lo_limit + 0.5 * (probe - lo_limit);
    if (gap(probe) < 0) lower = bisect_bracket(gap, probe, peak, tight).hi;
  }
  double upper = hi_limit;
  if (gap(hi_limit) < 0) upper = bisect_bracket(gap, peak, hi_limit, tight).lo;
  return Interval{lower, upper};
}

/// (alpha1 log2(1/eta) + alpha2) / (1 - eta)
double fractional_objective(double alpha1, double alpha2, double eta);

struct DinkelbachResult {
  double eta;
  double objective;
  int iterations;
  std::vector<double> zeta_trace;  ///< ratio value after each update
};

/// Minimizes (alpha1 log2(1/eta) + alpha2)/(1 - eta) over [eta_lo, eta_hi].
/// The parametric subproblem is convex in eta, so its minimizer is the
/// stationary point alpha1/(ln2 zeta) clamped into the box.
DinkelbachResult dinkelbach(double alpha1, double alpha2, double eta_lo, double eta_hi,
                            const Tolerance& tol = {});

}  // namespace fedwire::numerics
