#include "fedwire/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fedwire::numerics {

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e
constexpr double kBranchClamp = 1e-12;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double halley_refine(double x, double w) {
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (f == 0.0 || wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double dw = f / denom;
    if (!std::isfinite(dw)) break;
    w -= dw;
    if (std::abs(dw) <= 4.0 * kEps * (1.0 + std::abs(w))) break;
  }
  return w;
}

// Series around the branch point in p = ±sqrt(2(ex + 1)).
double branch_series(double p) { return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p; }

}  // namespace

void Tolerance::validate() const {
  if (!(abs_tol >= 0.0) || !(rel_tol >= 0.0) || (abs_tol == 0.0 && rel_tol == 0.0))
    throw DomainError("Tolerance: abs_tol and rel_tol must be non-negative and not both zero");
  if (max_iter < 1) throw DomainError("Tolerance: max_iter must be >= 1");
}

double lambert_w0(double x) {
  if (std::isnan(x)) throw DomainError("lambert_w0: NaN argument");
  if (x < -kInvE - kBranchClamp) throw DomainError("lambert_w0: argument below -1/e");
  if (x <= -kInvE) return -1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  if (x < -0.25) {
    w = branch_series(std::sqrt(2.0 * (std::numbers::e * x + 1.0)));
  } else if (x < 3.0) {
    w = std::log1p(x);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  return std::max(-1.0, halley_refine(x, w));
}

double lambert_wm1(double x) {
  if (std::isnan(x)) throw DomainError("lambert_wm1: NaN argument");
  if (x < -kInvE - kBranchClamp || x >= 0.0)
    throw DomainError("lambert_wm1: argument outside [-1/e, 0)");
  if (x <= -kInvE) return -1.0;

  double w;
  if (x < -0.25) {
    w = branch_series(-std::sqrt(2.0 * (std::numbers::e * x + 1.0)));
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  return std::min(-1.0, halley_refine(x, w));
}

double psi(double x) {
  if (x < 0.1) {
    // sum_{n>=2} (n-1) x^n / n!
    double term = x * x / 2.0;  // x^n / n! at n = 2
    double sum = term;
    for (int n = 3; n < 24; ++n) {
      term *= x / n;
      sum += (n - 1) * term;
    }
    return sum;
  }
  return (x - 1.0) * std::exp(x) + 1.0;
}

double psi_inverse(double m) {
  if (std::isnan(m) || m < 0.0) throw DomainError("psi_inverse: argument must be >= 0");
  if (m == 0.0) return 0.0;
  // (x-1)e^{x-1} = (m-1)/e, so x = 1 + W0((m-1)/e); polish with Newton since
  // the closed form loses digits as m -> 0.
  double x = m < 1e-6 ? std::sqrt(2.0 * m) : 1.0 + lambert_w0((m - 1.0) * kInvE);
  if (!(x > 0.0)) x = std::sqrt(2.0 * m);
  for (int it = 0; it < 60; ++it) {
    const double dx = (psi(x) - m) / (x * std::exp(x));
    if (!std::isfinite(dx)) break;
    double next = x - dx;
    if (next <= 0.0) next = 0.5 * x;
    const bool done = std::abs(next - x) <= 4.0 * kEps * x;
    x = next;
    if (done) break;
  }
  return x;
}

double fractional_objective(double alpha1, double alpha2, double eta) {
  return (alpha1 * std::log2(1.0 / eta) + alpha2) / (1.0 - eta);
}

DinkelbachResult dinkelbach(double alpha1, double alpha2, double eta_lo, double eta_hi,
                            const Tolerance& tol) {
  tol.validate();
  if (!(eta_lo > 0.0 && eta_lo <= eta_hi && eta_hi < 1.0))
    throw DomainError("dinkelbach: need 0 < eta_lo <= eta_hi < 1");
  if (!(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1 + alpha2 > 0.0))
    throw DomainError("dinkelbach: need alpha1, alpha2 >= 0 with positive sum");

  const auto numer = [&](double eta) { return alpha1 * std::log2(1.0 / eta) + alpha2; };
  const auto denom = [](double eta) { return 1.0 - eta; };
  const auto inner_argmin = [&](double zeta) {
    return std::clamp(alpha1 / (std::numbers::ln2 * zeta), eta_lo, eta_hi);
  };
  const auto h_value = [&](double zeta, double eta) { return numer(eta) - zeta * denom(eta); };

  DinkelbachResult out{};
  double eta = std::sqrt(eta_lo * eta_hi);
  double zeta = numer(eta) / denom(eta);
  out.zeta_trace.push_back(zeta);

  double eta_next = inner_argmin(zeta);
  double h_prev = h_value(zeta, eta_next);
  for (int it = 1; it <= tol.max_iter; ++it) {
    out.iterations = it;
    const double zeta_next = numer(eta_next) / denom(eta_next);
    if (zeta_next > zeta) break;  // rounding; eta is already optimal
    eta = eta_next;
    zeta = zeta_next;
    out.zeta_trace.push_back(zeta);

    eta_next = inner_argmin(zeta);
    const double h = h_value(zeta, eta_next);
    if (h == 0.0 || h_prev == 0.0 || eta_next == eta) break;
    if (std::abs(h) / std::abs(h_prev) < tol.rel_tol) {
      // One more update lands on the root of H to within rounding.
      const double zeta_final = numer(eta_next) / denom(eta_next);
      if (zeta_final <= zeta) {
        eta = eta_next;
        zeta = zeta_final;
        out.zeta_trace.push_back(zeta);
      }
      break;
    }
    h_prev = h;
  }
  out.eta = eta;
  out.objective = zeta;
  return out;
}

}  // namespace fedwire::numerics
