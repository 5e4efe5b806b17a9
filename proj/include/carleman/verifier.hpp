#pragma once

// Numerical checks of every estimate in the constructive proof of the
// L^p - L^{p'} Carleman inequality on R x M': the flawed sum-integral
// comparison, the bounding functions g, h, sigma and integrals I, J,
// the cluster blocks A_k, the Hardy-Littlewood-Sobolev step, and the
// sigma^{-2/p'} dependence of the constant.
//
// Throughout, a = 2/p' and alpha = 1 - a. Every generic constant of the
// proof is replaced by the explicit value its own chain of estimates yields
// (ProofConstants), so "bounded" is checked against a number fixed in
// advance, not against a constant fitted to the data being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "carleman/errors.hpp"
#include "carleman/harmonics.hpp"
#include "carleman/multiplier.hpp"
#include "carleman/solver.hpp"
#include "carleman/spectra.hpp"

namespace carleman {

using NamedValues = std::vector<std::pair<std::string, double>>;

struct InequalityReport {
  std::string name;
  NamedValues parameters;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool holds = false;   // margin >= 0
  NamedValues diagnostics;

  double diagnostic(const std::string& key) const {
    for (const auto& [k, v] : diagnostics)
      if (k == key) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

inline InequalityReport make_report(std::string name, NamedValues parameters, double lhs, double rhs,
                                    NamedValues diagnostics = {}) {
  InequalityReport r{std::move(name), std::move(parameters), lhs, rhs, rhs - lhs, false, std::move(diagnostics)};
  r.holds = r.margin >= 0.0;
  return r;
}

/// Log-log least-squares fit y ~ constant * x^exponent.
struct ConstantFit {
  std::optional<double> exponent;   // undefined with fewer than two points
  double constant = 0.0;
  std::optional<double> r_squared;  // in [0, 1]
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
};

inline ConstantFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_power_law: need matching nonempty data");
  ConstantFit fit;
  fit.points = x.size();
  fit.window_lo = *std::min_element(x.begin(), x.end());
  fit.window_hi = *std::max_element(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_power_law: data must be positive");
  if (x.size() == 1 || fit.window_lo == fit.window_hi) {
    fit.constant = y[0];
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ly = std::log(y[i]);
    const double pred = intercept + slope * std::log(x[i]);
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - mean) * (ly - mean);
  }
  fit.exponent = slope;
  fit.constant = std::exp(intercept);
  fit.r_squared = ss_tot == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

// ---------------------------------------------------------------------------
// The flawed sum-integral comparison

namespace detail {

template <class F>
double adaptive_integral(F&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  // Boost fixes its absolute tolerance from the first, unrefined estimate;
  // a poor first estimate would drive the bisection to full depth, so the
  // depth is capped at 15.
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-13, &err);
  if (!std::isfinite(v)) throw quadrature_failure("adaptive_integral: non-finite result");
  return v;
}

} // namespace detail

/// Compares sum_{1<=k<=tau-2} k^{-2/n} e^{-((tau-2)-k)|t|} with the integral
/// of the same expression over r in (0, tau-2]. The comparison relies on the
/// integrand being nonincreasing, which holds iff |t|(tau-2) <= 2/n.
inline InequalityReport check_flawed_inequality(double tau, double t, int n) {
  if (!(tau > 4.0)) throw std::invalid_argument("check_flawed_inequality: tau must be > 4");
  if (n < 3) throw std::invalid_argument("check_flawed_inequality: n must be >= 3");
  const double b = tau - 2.0;
  const double e = 2.0 / n;
  const double at = std::abs(t);
  double lhs = 0.0;
  const auto k_max = static_cast<long long>(std::floor(b));
  for (long long k = 1; k <= k_max; ++k) lhs += std::pow(static_cast<double>(k), -e) * std::exp(-(b - k) * at);
  // Split at r = b/2. Below, r = v^n turns r^{-2/n} dr into n v^{n-3} dv.
  // Above, y = b - r is integrated up to 40/|t|, past which the weight is
  // under e^{-40}; the lower part is negligible once b|t|/2 > 40.
  const double half = 0.5 * b;
  const double low = half * at > 40.0 ? 0.0
                                       : detail::adaptive_integral(
                                             [&](double v) {
                                               return n * std::pow(v, n - 3) * std::exp(-(b - std::pow(v, n)) * at);
                                             },
                                             0.0, std::pow(half, 1.0 / n));
  const double reach = at > 0.0 ? std::min(half, 40.0 / at) : half;
  const double high =
      detail::adaptive_integral([&](double y) { return std::pow(b - y, -e) * std::exp(-y * at); }, 0.0, reach);
  const double rhs = low + high;
  const bool premise = at * b <= e;
  return make_report("flawed_0.1", {{"tau", tau}, {"t", t}, {"n", static_cast<double>(n)}}, lhs, rhs,
                     {{"premise_holds", premise ? 1.0 : 0.0}, {"premise_value", at * b}, {"premise_bound", e},
                      {"relative_margin", (rhs - lhs) / rhs}});
}

struct FlawScan {
  std::vector<InequalityReport> reports;
  std::optional<InequalityReport> counterexample;  // first violation with >= min relative excess
  std::size_t premise_points = 0;
  std::size_t premise_failures = 0;  // premise holds but inequality fails
};

/// Scans tau over a linear grid and t over a log grid (outer loop tau).
inline FlawScan scan_flawed_inequality(std::span<const double> taus, std::span<const double> ts, std::span<const int> ns,
                                       double min_relative_excess = 0.01) {
  FlawScan scan;
  for (int n : ns)
    for (double tau : taus)
      for (double t : ts) {
        auto r = check_flawed_inequality(tau, t, n);
        if (r.diagnostic("premise_holds") == 1.0) {
          ++scan.premise_points;
          if (!r.holds) ++scan.premise_failures;
        }
        if (!scan.counterexample && r.lhs > r.rhs * (1.0 + min_relative_excess)) scan.counterexample = r;
        scan.reports.push_back(std::move(r));
      }
  return scan;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  auto e = linear_grid(std::log(lo), std::log(hi), count);
  for (double& x : e) x = std::exp(x);
  if (!e.empty()) e.front() = lo, e.back() = hi;
  return e;
}

// ---------------------------------------------------------------------------
// Explicit constants of the proof

struct ProofConstants {
  double p_prime = 0.0;
  double a = 0.0;       // 2/p'
  double alpha = 0.0;   // 1 - 2/p'
  double sup_exp = 0.0;       // sup_eta eta^a e^{-eta} = (a/e)^a
  double sup_exp_two = 0.0;   // sup_eta eta^a e^{-2 eta} = (a/(2e))^a
  double small_gap = 0.0;     // int_0^alpha r^{a-1} dr = alpha^a / a           (I_tau, eq3)
  double beta_tail = 0.0;     // int_0^alpha r^{a-1} (1-r)^{-a} dr              (eq3.1)
  double upper_sum = 0.0;     // alpha^{2(a-1)}                                  (eq3.2)
  double g_sum = 0.0;         // max(small_gap, sup_exp * beta_tail + upper_sum) (eq3 + eq4)
  double j_small = 0.0;       // 1/a + 1, J_tau when (floor(tau)+1) dt < 1
  double j_large = 1.0;       // J_tau when (floor(tau)+1) dt >= 1
  double two_a = 0.0;         // 2^a, from (1+k)^a <= 2^a k^a

  double block_low() const { return two_a * g_sum; }                    // eq5
  double block_high() const { return two_a * std::max(j_small, j_large); } // eq7
  double block_zero() const { return sup_exp_two; }                       // eq11
  double block_one() const { return two_a * sup_exp_two; }               // eq11.1
  double block_near() const { return 3.0 * two_a * sup_exp; }            // eq12, times sigma^{-a}
  /// Total kernel constant for sigma <= 1: everything times sigma^{-a}.
  double block_total() const {
    return block_near() + block_low() + block_high() + block_zero() + block_one();
  }
};

inline ProofConstants proof_constants(double p_prime) {
  if (!(p_prime > 2.0)) throw std::invalid_argument("proof_constants: p' must be > 2");
  ProofConstants c;
  c.p_prime = p_prime;
  c.a = 2.0 / p_prime;
  c.alpha = 1.0 - c.a;
  c.sup_exp = std::pow(c.a / std::numbers::e, c.a);
  c.sup_exp_two = std::pow(c.a / (2.0 * std::numbers::e), c.a);
  c.small_gap = std::pow(c.alpha, c.a) / c.a;
  // incomplete beta B(alpha; a, 1-a), B(a, 1-a) = pi / sin(pi a)
  c.beta_tail = boost::math::ibeta(c.a, 1.0 - c.a, c.alpha) * std::numbers::pi / std::sin(std::numbers::pi * c.a);
  c.upper_sum = std::pow(c.alpha, 2.0 * (c.a - 1.0));
  c.g_sum = std::max(c.small_gap, c.sup_exp * c.beta_tail + c.upper_sum);
  c.j_small = 1.0 / c.a + 1.0;
  c.two_a = std::pow(2.0, c.a);
  return c;
}

/// Dimension n with p' = 2n/(n-2), as a real number.
inline double dimension_from_p_prime(double p_prime) { return 2.0 * p_prime / (p_prime - 2.0); }

inline double tau_min_real(double n) { return std::max(4.0 * (n - 1.0) / (n - 2.0), n + 1.0); }

/// gamma = alpha / (floor(tau) - 2), the split point between eq3 and eq4.
inline double split_point(double tau, double p_prime) {
  return (1.0 - 2.0 / p_prime) / (std::floor(tau) - 2.0);
}

// Bounding functions of the proof (dt = |t - s|).
inline double bound_g(double rho, double tau, double dt, double p_prime) {
  return std::pow(rho, 2.0 / p_prime - 1.0) * std::exp(-(tau - 1.0 - rho) * dt);
}
inline double bound_h(double rho, double tau, double dt, double p_prime) {
  return std::pow(rho, 2.0 / p_prime - 1.0) * std::exp(-(rho - tau) * dt);
}
inline double bound_sigma(double rho, double tau, double p_prime) {
  const double a = 2.0 / p_prime;
  return std::pow(rho, a - 1.0) * std::pow(std::floor(tau) - 1.0 - rho, -a);
}

namespace detail {

inline void require_kernel_regime(double tau, double dt, double p_prime, const char* who) {
  if (!(p_prime > 2.0)) throw std::invalid_argument(std::string(who) + ": p' must be > 2");
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(who) + ": dt must be > 0");
  const double n = dimension_from_p_prime(p_prime);
  if (tau < tau_min_real(n) * (1.0 - 1e-12))
    throw std::invalid_argument(std::string(who) + ": tau below tau(n)");
  const double alpha = 1.0 - 2.0 / p_prime;
  const double ft = std::floor(tau);
  const double split = std::floor(alpha * (ft - 1.0));
  if (split < 2.0 || split > ft - 3.0)
    throw std::invalid_argument(std::string(who) + ": floor(alpha (floor(tau)-1)) outside [2, floor(tau)-3]");
}

} // namespace detail

/// Samples f on a uniform grid of [lo, hi] and reports the largest
/// increase between neighbours (relative to |f|) against zero.
inline InequalityReport check_nonincreasing(std::string name, const std::function<double(double)>& f, double lo,
                                            double hi, std::size_t samples, NamedValues parameters = {}) {
  if (samples < 2 || !(hi > lo)) throw std::invalid_argument("check_nonincreasing: need samples >= 2 and hi > lo");
  double worst = -std::numeric_limits<double>::infinity();
  double prev = f(lo);
  for (std::size_t i = 1; i < samples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double v = f(x);
    worst = std::max(worst, (v - prev) / std::max(std::abs(prev), std::numeric_limits<double>::min()));
    prev = v;
  }
  parameters.emplace_back("lo", lo);
  parameters.emplace_back("hi", hi);
  // relative round-off allowance
  return make_report(std::move(name), std::move(parameters), worst, 1e-13);
}

/// g is nonincreasing on [1, floor(tau)-2] when dt <= gamma.
inline InequalityReport g_monotone_window(double tau, double dt, double p_prime, std::size_t samples = 200) {
  return check_nonincreasing("g_monotone", [&](double r) { return bound_g(r, tau, dt, p_prime); }, 1.0,
                             std::floor(tau) - 2.0, samples, {{"tau", tau}, {"dt", dt}, {"p_prime", p_prime}});
}

/// sigma is nonincreasing on [1, alpha (floor(tau)-1)].
inline InequalityReport sigma_monotone_window(double tau, double p_prime, std::size_t samples = 200) {
  const double alpha = 1.0 - 2.0 / p_prime;
  return check_nonincreasing("sigma_monotone", [&](double r) { return bound_sigma(r, tau, p_prime); }, 1.0,
                             alpha * (std::floor(tau) - 1.0), samples, {{"tau", tau}, {"p_prime", p_prime}});
}

/// sum_{k=2}^{floor(tau)-2} g(k) against the proof's constant times
/// dt^{-2/p'}. The "normalized" diagnostic is lhs * dt^{2/p'}.
inline InequalityReport kernel_sum_bound(double tau, double dt, double p_prime) {
  detail::require_kernel_regime(tau, dt, p_prime, "kernel_sum_bound");
  const auto c = proof_constants(p_prime);
  const int top = static_cast<int>(std::floor(tau)) - 2;
  double lhs = 0.0;
  for (int k = 2; k <= top; ++k) lhs += bound_g(k, tau, dt, p_prime);
  const double gamma = split_point(tau, p_prime);
  const bool small = dt <= gamma;
  const double constant = small ? c.small_gap : c.sup_exp * c.beta_tail + c.upper_sum;
  return make_report(small ? "eq3" : "eq4", {{"tau", tau}, {"dt", dt}, {"p_prime", p_prime}}, lhs,
                     constant * std::pow(dt, -c.a),
                     {{"normalized", lhs * std::pow(dt, c.a)}, {"gamma", gamma}, {"constant", constant}});
}

/// The two halves of the sum over k >= 2, split at floor(alpha (floor(tau)-1)).
/// The upper half is only estimated for dt > gamma.
inline std::vector<InequalityReport> kernel_sum_split(double tau, double dt, double p_prime) {
  detail::require_kernel_regime(tau, dt, p_prime, "kernel_sum_split");
  const auto c = proof_constants(p_prime);
  const int ft = static_cast<int>(std::floor(tau));
  const int split = static_cast<int>(std::floor(c.alpha * (ft - 1)));
  double low = 0.0, high = 0.0;
  for (int k = 2; k <= split; ++k) low += bound_g(k, tau, dt, p_prime);
  for (int k = split + 1; k <= ft - 2; ++k) high += bound_g(k, tau, dt, p_prime);
  const NamedValues params{{"tau", tau}, {"dt", dt}, {"p_prime", p_prime}};
  std::vector<InequalityReport> out;
  const double scale = std::pow(dt, -c.a);
  out.push_back(make_report("eq3.1", params, low, c.sup_exp * c.beta_tail * scale,
                            {{"normalized", low / scale}, {"split", static_cast<double>(split)}}));
  const double gamma = split_point(tau, p_prime);
  if (dt > gamma)
    out.push_back(make_report("eq3.2", params, high, c.upper_sum * scale,
                              {{"normalized", high / scale}, {"split", static_cast<double>(split)}}));
  return out;
}

/// I_tau(dt) = int_1^{floor(tau)-2} rho^{a-1} e^{-(tau-1-rho) dt} d rho,
/// valid only for dt <= gamma.
inline InequalityReport integral_I_bound(double tau, double dt, double p_prime) {
  detail::require_kernel_regime(tau, dt, p_prime, "integral_I_bound");
  const double gamma = split_point(tau, p_prime);
  if (dt > gamma * (1.0 + 1e-12))
    throw regime_error("integral_I_bound: dt = " + std::to_string(dt) + " exceeds gamma = " + std::to_string(gamma));
  const auto c = proof_constants(p_prime);
  const double top = std::floor(tau) - 2.0;
  const double value =
      detail::adaptive_integral([&](double rho) { return bound_g(rho, tau, dt, p_prime); }, 1.0, top);
  return make_report("I_tau", {{"tau", tau}, {"dt", dt}, {"p_prime", p_prime}}, value, c.small_gap * std::pow(dt, -c.a),
                     {{"normalized", value * std::pow(dt, c.a)}, {"gamma", gamma}});
}

/// J_tau(dt) = int_{floor(tau)+1}^inf rho^{a-1} e^{-(rho-tau) dt} d rho,
/// integrated up to R and completed by the tail bound
/// R^{a-1} e^{-(R-tau) dt} / dt, which is added to the reported value.
inline InequalityReport integral_J_bound(double tau, double dt, double p_prime) {
  detail::require_kernel_regime(tau, dt, p_prime, "integral_J_bound");
  const auto c = proof_constants(p_prime);
  const double lo = std::floor(tau) + 1.0;
  const double reach = 40.0 / dt;  // e^{-40} relative tail
  const double hi = lo + reach;
  auto integrand = [&](double rho) { return bound_h(rho, tau, dt, p_prime); };
  // split so that the adaptive rule sees the decay scale
  double value = 0.0;
  double left = lo;
  for (double width = std::min(1.0 / dt, reach) / 8.0; left < hi; width *= 2.0) {
    const double right = std::min(hi, left + width);
    value += detail::adaptive_integral(integrand, left, right);
    left = right;
  }
  const double tail = std::pow(hi, c.a - 1.0) * std::exp(-(hi - tau) * dt) / dt;
  value += tail;
  const bool small = (std::floor(tau) + 1.0) * dt < 1.0;
  const double constant = small ? c.j_small : c.j_large;
  return make_report(small ? "J_tau_small" : "J_tau_large", {{"tau", tau}, {"dt", dt}, {"p_prime", p_prime}}, value,
                     constant * std::pow(dt, -c.a), {{"normalized", value * std::pow(dt, c.a)}, {"tail_bound", tail}});
}

/// Both integral estimates; raises regime_error when dt > gamma.
inline std::pair<InequalityReport, InequalityReport> integral_bounds(double tau, double dt, double p_prime) {
  return {integral_I_bound(tau, dt, p_prime), integral_J_bound(tau, dt, p_prime)};
}

// ---------------------------------------------------------------------------
// Cluster blocks

/// Pointwise kernels of the blocks of sum_k A_k: for each block B,
/// K_B(eta) = sum_{k in B} (1+k)^a envelope_k(eta), compared with the
/// block's constant times |eta|^{-a} (times sigma^{-a} for the clusters next
/// to tau and for the total). The high block is summed until the remainder
/// bound falls below 1e-14 of the partial sum and that remainder is added.
inline std::vector<InequalityReport> cluster_block_checks(double tau, double sigma, double p_prime, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("cluster_block_checks: eta must be > 0");
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("cluster_block_checks: sigma must be in (0, 1]");
  detail::require_kernel_regime(tau, eta, p_prime, "cluster_block_checks");
  const auto c = proof_constants(p_prime);
  const int ft = static_cast<int>(std::floor(tau));
  auto term = [&](int k) { return std::pow(1.0 + k, c.a) * cluster_envelope(k, tau, sigma, eta); };

  const double k0 = term(0);
  const double k1 = term(1);
  double low = 0.0;
  for (int k = 2; k <= ft - 2; ++k) low += term(k);
  double near = 0.0;
  for (int k = ft - 1; k <= ft + 1; ++k) near += term(k);
  double high = 0.0;
  long long k = ft + 2;
  for (;; ++k) {
    high += term(static_cast<int>(k));
    // remainder <= int_k^inf 2^a rho^{a-1} e^{-(rho-tau) eta} d rho <= 2^a k^{a-1} e^{-(k-tau) eta} / eta
    const double rest = c.two_a * std::pow(static_cast<double>(k), c.a - 1.0) * std::exp(-(k - tau) * eta) / eta;
    if (rest <= 1e-14 * high || k > 100000000LL) {
      high += rest;
      break;
    }
  }
  const double base = std::pow(eta, -c.a);
  const double sig = std::pow(sigma, -c.a);
  const NamedValues params{{"tau", tau}, {"sigma", sigma}, {"eta", eta}, {"p_prime", p_prime}};
  auto normalized = [&](double v, double s) { return NamedValues{{"normalized", v / (base * s)}}; };
  return {
      make_report("eq11", params, k0, c.block_zero() * base, normalized(k0, 1.0)),
      make_report("eq11.1", params, k1, c.block_one() * base, normalized(k1, 1.0)),
      make_report("eq5", params, low, c.block_low() * base, normalized(low, 1.0)),
      make_report("eq12", params, near, c.block_near() * sig * base, normalized(near, sig)),
      make_report("eq7", params, high, c.block_high() * base, normalized(high, 1.0)),
      make_report("eq8_kernel", params, k0 + k1 + low + near + high, c.block_total() * sig * base,
                  normalized(k0 + k1 + low + near + high, sig)),
  };
}

/// A_k(t) = (1+k)^{2/p'} sum_s w_s envelope_k(t - s) N(s), with N(s) the
/// profile ||f(s, .)||_{L^p(M')} on the time grid and trapezoid weights w_s.
/// When t is a node, the kink of the envelope c e^{-r|eta|} at s = t gets
/// its Euler-Maclaurin correction -(h^2/6) c r N(t), restoring O(h^4).
inline double compute_A_k(int k, double t, std::span<const double> slice_norms, const TimeGrid& grid, double tau,
                          double sigma, double p_prime) {
  if (slice_norms.size() != grid.size()) throw std::invalid_argument("compute_A_k: profile length mismatch");
  const double h = grid.step();
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (slice_norms[i] == 0.0) continue;
    const double w = (i == 0 || i + 1 == grid.size()) ? 0.5 * h : h;
    s += w * cluster_envelope(k, tau, sigma, t - grid.node(i)) * slice_norms[i];
  }
  const double pos = (t - grid.node(0)) / h;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9 && nearest > 0.0 && nearest < static_cast<double>(grid.size() - 1)) {
    const double c = cluster_envelope(k, tau, sigma, 0.0);
    const double r = std::log(c / cluster_envelope(k, tau, sigma, 1.0));
    s -= h * h / 6.0 * c * r * slice_norms[static_cast<std::size_t>(nearest)];
  }
  return std::pow(1.0 + k, 2.0 / p_prime) * s;
}

inline double compute_A_k(int k, double t, const ProductField& f, double tau, double sigma, const SphereGrid& grid) {
  const auto norms = slice_lp_norms(f, f.params().p, grid);
  return compute_A_k(k, t, norms, f.grid(), tau, sigma, f.params().p_prime);
}

/// int |t - s|^{-a} F(s) ds at every node, with F piecewise constant on
/// the cells around the nodes so that the singular cell is integrated
/// exactly: weight_d = int_{(d-1/2)h}^{(d+1/2)h} |x|^{-a} dx.
inline std::vector<double> fractional_integral(std::span<const double> profile, double h, double a) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("fractional_integral: exponent must be in (0, 1)");
  const std::size_t n = profile.size();
  std::vector<double> weights(n);
  auto antiderivative = [a](double x) { return std::pow(x, 1.0 - a) / (1.0 - a); };
  weights[0] = 2.0 * antiderivative(0.5 * h);
  for (std::size_t d = 1; d < n; ++d)
    weights[d] = antiderivative((static_cast<double>(d) + 0.5) * h) - antiderivative((static_cast<double>(d) - 0.5) * h);
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (profile[k] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += weights[i > k ? i - k : k - i] * profile[k];
  }
  return out;
}

struct ChainOptions {
  std::size_t t_stride = 10;  // check every t_stride-th time node
};

/// The chain (eq1) -> (eq2) -> (eq8) on a concrete field u on R x S^2, with
/// f = conjugated_apply(u, tau):
///   eq1: ||u(t)||_{p'} <= c4 sum_k (1+k)^{1/p'} ||pi_k u(t)||_2
///   eq2: ||u(t)||_{p'} <= c4 c5 sum_k A_k(t)
///   eq8: ||u(t)||_{p'} <= c4 c5 C sigma^{-a} int |t-s|^{-a} ||f(s)||_p ds
/// where c4, c5 are the fitted cluster constants and C the total block
/// constant. Sums over k run over the clusters where u is nonzero.
inline std::vector<InequalityReport> proof_chain_checks(const ProductField& u, double tau, double sigma,
                                                        const SphereGrid& grid, const ClusterConstantTable& clusters,
                                                        const ChainOptions& options = {}) {
  const auto& prm = u.params();
  const double pp = prm.p_prime;
  const double a = 2.0 / pp;
  const double c4 = clusters.up4_constant();
  const double c5 = clusters.up5_constant();
  const auto consts = proof_constants(pp);
  const auto f = conjugated_apply(u, tau);
  const auto u_norms = slice_lp_norms(u, pp, grid);
  const auto f_norms = slice_lp_norms(f, prm.p, grid);
  const auto frac = fractional_integral(f_norms, u.grid().step(), a);
  const auto& spec = u.spectrum();

  int k_top = 0;
  for (std::size_t q : u.nonzero_modes()) k_top = std::max(k_top, static_cast<int>(std::floor(u.lambda(q))));

  std::vector<InequalityReport> out;
  for (std::size_t i = 0; i < u.grid().size(); i += std::max<std::size_t>(1, options.t_stride)) {
    const double t = u.grid().node(i);
    const double lhs = u_norms[i];
    if (lhs == 0.0) continue;
    double eq1 = 0.0;
    double eq2 = 0.0;
    for (int k = 0; k <= k_top; ++k) {
      double cluster_sq = 0.0;
      for (std::size_t q : u.nonzero_modes()) {
        const double lam = spec.value(u.mode(q).distinct);
        if (lam >= k && lam < k + 1.0) cluster_sq += u.profile(q)[i] * u.profile(q)[i];
      }
      if (cluster_sq == 0.0) continue;
      eq1 += std::pow(1.0 + k, 1.0 / pp) * std::sqrt(cluster_sq);
      eq2 += compute_A_k(k, t, f_norms, f.grid(), tau, sigma, pp);
    }
    const NamedValues params{{"tau", tau}, {"sigma", sigma}, {"t", t}};
    out.push_back(make_report("eq1", params, lhs, c4 * eq1));
    out.push_back(make_report("eq2", params, lhs, c4 * c5 * eq2));
    out.push_back(make_report("eq8", params, lhs, c4 * c5 * consts.block_total() * std::pow(sigma, -a) * frac[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Carleman ratio and its sigma dependence

/// ||u||_{L^{p'}(R x S^2)} / ||conjugated_apply(u, tau)||_{L^p(R x S^2)}.
inline double carleman_ratio(const ProductField& u, double tau, const SphereGrid& grid) {
  if (!u.satisfies_support())
    throw std::invalid_argument("carleman_ratio: u is not negligible at the window boundary");
  const auto& prm = u.params();
  if (!is_admissible(tau, u.spectrum(), prm.sigma * (1.0 - 1e-12), prm.n))
    throw admissibility_error("carleman_ratio: tau = " + std::to_string(tau) + " is not admissible");
  const auto f = conjugated_apply(u, tau);
  const double denom = product_lp_norm(f, prm.p, grid);
  if (!(denom > 0.0)) throw degenerate_input_error("carleman_ratio: conjugated field has zero norm");
  return product_lp_norm(u, prm.p_prime, grid) / denom;
}

struct SweepOptions {
  std::vector<double> widths{0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  double max_mixed_width = 4.0;  // mixed-degree trials use the brute-force norm
  double tau_step = 0.2;         // |tau| h
};

struct SweepTrial {
  double sigma = 0.0;
  double tau = 0.0;
  std::string kind;
  double width = 0.0;
  double ratio = 0.0;
};

struct SweepPoint {
  double sigma = 0.0;
  double tau = 0.0;
  int resonant_degree = 0;
  double max_ratio = 0.0;
  double normalized = 0.0;  // max_ratio * sigma^{2/p'}
};

struct CarlemanSweep {
  ConstantFit fit;               // free log-log fit of max_ratio against sigma
  double envelope_constant = 0;  // smallest c with max_ratio <= c sigma^{-2/p'} on the window
  double kernel_exponent = 0;    // 2/p'
  std::vector<SweepPoint> points;
  std::vector<SweepTrial> trials;

  /// Max ratio never decreases as sigma decreases.
  bool monotone() const {
    auto sorted = points;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.sigma > y.sigma; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i].max_ratio < sorted[i - 1].max_ratio) return false;
    return true;
  }
};

/// For tau at distance exactly sigma above the first eigenvalue lambda_l
/// with lambda_l + sigma >= tau(n), the worst admissible placement.
inline std::pair<double, int> resonant_tau(const Spectrum& s, double sigma, int n) {
  const double floor_tau = tau_min(n);
  for (std::size_t l = 0; l + 1 < s.size(); ++l) {
    const double tau = s.value(l) + sigma;
    if (tau >= floor_tau && s.value(l + 1) - tau >= sigma) return {tau, static_cast<int>(l)};
  }
  throw std::invalid_argument("resonant_tau: spectrum truncation too short for sigma = " + std::to_string(sigma));
}

/// Probes the Carleman constant near resonance on R x S^2: for every sigma,
/// tau = lambda_l + sigma and the ratio is maximized over Gaussian time
/// profiles of several widths times (zonal, sectoral and random) degree-l
/// harmonics, plus random mixed-degree superpositions. The same family,
/// including its random draws, is used for every sigma.
inline CarlemanSweep constant_sweep(const Spectrum& spectrum, int n, std::span<const double> sigma_list, int trials,
                                    std::uint64_t seed, const SweepOptions& options = {}) {
  if (sigma_list.empty()) throw std::invalid_argument("constant_sweep: empty sigma list");
  if (n != 3) throw std::invalid_argument("constant_sweep: the concrete realization is S^2 (n = 3)");
  if (trials < 0) throw std::invalid_argument("constant_sweep: trials must be >= 0");
  const double kappa = spectral_gap(spectrum);
  for (double s : sigma_list)
    if (!(s > 0.0) || s > 0.5 * kappa * (1.0 + 1e-12))
      throw std::invalid_argument("constant_sweep: sigma must lie in (0, kappa/2]");

  CarlemanSweep sweep;
  const auto base = make_params(n, 1.0, sigma_list[0]);
  sweep.kernel_exponent = base.kernel_exponent();
  std::normal_distribution<double> normal(0.0, 1.0);

  int band = 0;
  for (double s : sigma_list) band = std::max(band, resonant_tau(spectrum, s, n).second + 1);
  const int pp_int = static_cast<int>(std::ceil(base.p_prime));
  const auto grid = build_grid(band, std::max(2 * band, pp_int * band));
  const auto spec_ptr = std::make_shared<const Spectrum>(spectrum);

  for (double sigma : sigma_list) {
    const auto [tau, l] = resonant_tau(spectrum, sigma, n);
    const auto params = make_params(n, tau, sigma);
    const double h_max = options.tau_step / tau;
    SweepPoint point{sigma, tau, l, 0.0, 0.0};

    auto make_field = [&](double width) {
      // T = 5 W puts the Gaussian below e^{-25} at the boundary.
      const double T = 5.0 * width;
      const double h = std::min(h_max, width / 25.0);
      const auto cells = static_cast<double>(std::ceil(2.0 * T / h));
      return ProductField(TimeGrid(T, 2.0 * T / cells), spec_ptr, params);
    };
    auto gaussian = [](const TimeGrid& g, double width) {
      std::vector<double> v(g.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-std::pow(g.node(i) / width, 2));
      return v;
    };
    auto record = [&](const std::string& kind, double width, const ProductField& u) {
      const double r = carleman_ratio(u, tau, *grid);
      sweep.trials.push_back({sigma, tau, kind, width, r});
      point.max_ratio = std::max(point.max_ratio, r);
    };

    for (double width : options.widths) {
      for (int m : {0, l}) {
        auto u = make_field(width);
        u.set_profile(sh_index(l, m), gaussian(u.grid(), width));
        record(m == 0 ? "zonal" : "sectoral", width, u);
      }
    }
    for (int trial = 0; trial < trials; ++trial) {
      auto rng = trial_engine(seed, trial, 0);
      const double width = options.widths[static_cast<std::size_t>(trial) % options.widths.size()];
      auto u = make_field(width);
      const auto g = gaussian(u.grid(), width);
      for (int m = -l; m <= l; ++m) {
        const double c = normal(rng);
        std::vector<double> v(g);
        for (double& x : v) x *= c;
        u.set_profile(sh_index(l, m), std::move(v));
      }
      record("random_resonant", width, u);
    }
    for (int trial = 0; trial < trials; ++trial) {
      auto rng = trial_engine(seed, trial, 1);
      std::vector<double> small;
      for (double w : options.widths)
        if (w <= options.max_mixed_width) small.push_back(w);
      if (small.empty()) break;
      const double width = small.back();
      auto u = make_field(width);
      for (int deg = std::max(0, l - 1); deg <= l + 1 && deg <= band; ++deg)
        for (int m = -deg; m <= deg; ++m) {
          const double c = normal(rng);
          const double w = small[static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, small.size() - 1)(rng))];
          auto v = gaussian(u.grid(), w);
          for (double& x : v) x *= c;
          u.set_profile(sh_index(deg, m), std::move(v));
        }
      record("random_mixed", width, u);
    }
    point.normalized = point.max_ratio * std::pow(sigma, sweep.kernel_exponent);
    sweep.envelope_constant = std::max(sweep.envelope_constant, point.normalized);
    sweep.points.push_back(point);
  }

  std::vector<double> xs, ys;
  for (const auto& p : sweep.points) xs.push_back(p.sigma), ys.push_back(p.max_ratio);
  sweep.fit = fit_power_law(xs, ys);
  return sweep;
}

// ---------------------------------------------------------------------------
// Hardy-Littlewood-Sobolev step

struct HlsFunction {
  std::string name;
  std::function<double(double)> f;
  double support_half_width = 1.0;  // f vanishes outside [-w, w]
};

struct HlsOptions {
  double step = 1e-3;
  double output_reach = 25.0;  // output window half-width in units of the support half-width
};

struct HlsRow {
  std::string name;
  double dilation = 1.0;
  double ratio = 0.0;
};

struct HlsResult {
  double p = 0.0;
  double p_prime = 0.0;
  double kernel_exponent = 0.0;
  std::vector<HlsRow> rows;
  ConstantFit fit;               // ratio against dilation; exponent ~ 0 under scale invariance
  double sup_ratio = 0.0;
  double max_dilation_spread = 0.0;  // max over functions of max/min ratio - 1
};

inline HlsFunction box_function() {
  return {"box", [](double t) { return (t >= -0.5 && t < 0.5) ? 1.0 : 0.0; }, 0.5};
}

/// ||(|.|^{-2/p'} * f)||_{p'} / ||f||_p for f_delta(t) = f(t/delta) on a
/// 1-D cell-centered grid. The convolution is exact for piecewise constant
/// data (cell-averaged kernel weights) and the part of the output norm
/// beyond the window is completed with its asymptotic form
/// 2 (int f)^{p'} R^{1 - a p'} / (a p' - 1).
inline double hls_ratio(const HlsFunction& fn, double dilation, double p, const HlsOptions& options = {}) {
  const double pp = p / (p - 1.0);
  const double a = 2.0 / pp;
  const double h = options.step;
  const double support = fn.support_half_width * dilation;
  const auto n_in = static_cast<std::size_t>(std::ceil(support / h - 1e-9));
  const double reach = options.output_reach * std::max(support, fn.support_half_width);
  const auto n_out = static_cast<std::size_t>(std::ceil(reach / h - 1e-9));

  // nodes (i + 1/2) h for i in [-n, n)
  std::vector<double> f(2 * n_in);
  double mass = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(n_in) + 0.5) * h;
    f[i] = fn.f(t / dilation);
    mass += f[i] * h;
    fp += std::pow(std::abs(f[i]), p) * h;
  }
  if (fp == 0.0) throw degenerate_input_error("hls_ratio: zero function");

  auto antiderivative = [a](double x) { return std::pow(x, 1.0 - a) / (1.0 - a); };
  std::vector<double> weights(n_out + n_in + 1);
  weights[0] = 2.0 * antiderivative(0.5 * h);
  for (std::size_t d = 1; d < weights.size(); ++d)
    weights[d] = antiderivative((static_cast<double>(d) + 0.5) * h) - antiderivative((static_cast<double>(d) - 0.5) * h);

  double out = 0.0;
  for (std::size_t i = 0; i < 2 * n_out; ++i) {
    const long long ti = static_cast<long long>(i) - static_cast<long long>(n_out);
    double v = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (f[k] == 0.0) continue;
      const long long sk = static_cast<long long>(k) - static_cast<long long>(n_in);
      v += weights[static_cast<std::size_t>(std::llabs(ti - sk))] * f[k];
    }
    out += std::pow(std::abs(v), pp) * h;
  }
  out += 2.0 * std::pow(std::abs(mass), pp) * std::pow(reach, 1.0 - a * pp) / (a * pp - 1.0);
  return std::pow(out, 1.0 / pp) / std::pow(fp, 1.0 / p);
}

inline HlsResult hls_probe(double p, std::span<const HlsFunction> family, std::span<const double> dilations,
                           const HlsOptions& options = {}) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("hls_probe: p must lie in (1, p'), i.e. (1, 2)");
  if (dilations.empty()) throw std::invalid_argument("hls_probe: no dilations");
  HlsResult res;
  res.p = p;
  res.p_prime = p / (p - 1.0);
  res.kernel_exponent = 2.0 / res.p_prime;
  std::vector<double> xs, ys;
  for (const auto& fn : family) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double d : dilations) {
      double r = 0.0;
      try {
        r = hls_ratio(fn, d, p, options);
      } catch (const degenerate_input_error&) {
        continue;  // zero function, skipped
      }
      res.rows.push_back({fn.name, d, r});
      xs.push_back(d), ys.push_back(r);
      lo = std::min(lo, r), hi = std::max(hi, r);
      res.sup_ratio = std::max(res.sup_ratio, r);
    }
    if (hi > 0.0) res.max_dilation_spread = std::max(res.max_dilation_spread, hi / lo - 1.0);
  }
  if (!xs.empty()) res.fit = fit_power_law(xs, ys);
  return res;
}

} // namespace carleman
