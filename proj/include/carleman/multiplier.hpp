#pragma once

// Resolvent multiplier of one eigenmode of the conjugated operator,
//
//   m(eta) = (1/2pi) int e^{i eta xi} / ((i xi - tau - lambda)(i xi - tau + lambda)) dxi,
//
// in closed form, a quadrature oracle for it, and the per-cluster envelopes.
//
// Closed form. With a = tau + lambda, b = tau - lambda and
// 1/((i xi - a)(i xi - b)) = (1/(a - b)) (1/(i xi - a) - 1/(i xi - b)), use
//   F^{-1}[1/(i xi - c)](eta) = -e^{c eta} 1{eta < 0}   (c > 0)
//                             =  e^{c eta} 1{eta > 0}   (c < 0)
// which gives, for tau > 0:
//   tau > lambda > 0 : (1/(2 lambda)) (e^{(tau-lambda) eta} - e^{(tau+lambda) eta}),  eta < 0
//   lambda > tau     : -(1/(2 lambda)) e^{(tau+lambda) eta}, eta < 0
//                      -(1/(2 lambda)) e^{(tau-lambda) eta}, eta > 0
//   lambda = 0       : |eta| e^{tau eta}, eta < 0   (double pole)
// and zero elsewhere.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

enum class HalfLine { negative, positive };

/// coefficient * |eta|^power * exp(-decay |eta|) on one open half-line.
struct ExpPiece {
  double coefficient = 0.0;
  double decay = 0.0;
  int power = 0;
  HalfLine side = HalfLine::negative;

  double operator()(double abs_eta) const {
    const double e = coefficient * std::exp(-decay * abs_eta);
    return power == 0 ? e : e * std::pow(abs_eta, power);
  }
};

class MultiplierKernel {
public:
  MultiplierKernel(double lambda, double tau) : lambda_(lambda), tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("MultiplierKernel: tau must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("MultiplierKernel: lambda must be >= 0");
    if (lambda == tau)
      throw singular_parameter_error("MultiplierKernel: tau = lambda = " + std::to_string(tau) +
                                     " puts a pole on the real axis");
    if (lambda == 0.0) {
      pieces_.push_back({1.0, tau, 1, HalfLine::negative});
    } else if (tau > lambda) {
      const double c = 0.5 / lambda;
      pieces_.push_back({c, tau - lambda, 0, HalfLine::negative});
      pieces_.push_back({-c, tau + lambda, 0, HalfLine::negative});
    } else {
      const double c = -0.5 / lambda;
      pieces_.push_back({c, tau + lambda, 0, HalfLine::negative});
      pieces_.push_back({c, lambda - tau, 0, HalfLine::positive});
    }
  }

  double lambda() const noexcept { return lambda_; }
  double tau() const noexcept { return tau_; }
  const std::vector<ExpPiece>& pieces() const noexcept { return pieces_; }

  double operator()(double eta) const {
    if (eta == 0.0) return 0.5 * (side_sum(HalfLine::negative, 0.0) + side_sum(HalfLine::positive, 0.0));
    return side_sum(eta < 0.0 ? HalfLine::negative : HalfLine::positive, std::abs(eta));
  }

  /// m'(0+) - m'(0-). Equals 1 for every mode: the kernel is the decaying
  /// fundamental solution of a monic second-order operator.
  double derivative_jump() const {
    double right = 0.0, left = 0.0;
    for (const auto& p : pieces_) {
      const double d0 = p.power == 0 ? p.decay * p.coefficient : p.coefficient;
      if (p.side == HalfLine::positive)
        right += p.power == 0 ? -d0 : d0;
      else
        left += p.power == 0 ? d0 : -d0;
    }
    return right - left;
  }

  /// Smallest decay rate among the pieces.
  double slowest_decay() const {
    double r = pieces_.front().decay;
    for (const auto& p : pieces_) r = std::min(r, p.decay);
    return r;
  }

  /// Exact integral over R; equals 1/(tau^2 - lambda^2).
  double integral() const {
    double s = 0.0;
    for (const auto& p : pieces_)
      s += p.power == 0 ? p.coefficient / p.decay : p.coefficient / (p.decay * p.decay);
    return s;
  }

private:
  double side_sum(HalfLine side, double abs_eta) const {
    double s = 0.0;
    for (const auto& p : pieces_)
      if (p.side == side) s += p(abs_eta);
    return s;
  }

  double lambda_;
  double tau_;
  std::vector<ExpPiece> pieces_;
};

inline double multiplier_closed(double lambda, double tau, double eta) {
  return MultiplierKernel(lambda, tau)(eta);
}

/// Bound (1/lambda) e^{-|tau - lambda| |eta|} for lambda >= 1, the estimate
/// the proof imports for every nonconstant mode.
inline double multiplier_decay_bound(double lambda, double tau, double eta) {
  if (!(lambda > 0.0)) throw std::invalid_argument("multiplier_decay_bound: lambda must be > 0");
  return std::exp(-std::abs(tau - lambda) * std::abs(eta)) / lambda;
}

/// Quadrature oracle for the defining xi-integral: symmetric truncation to
/// [-cutoff, cutoff] and the trapezoid rule. Before truncating, the
/// reference -1/(1 + xi^2) (whose transform is -e^{-|eta|}/2) is subtracted
/// from the integrand, which cancels the slowly decaying xi^{-2} tail and
/// leaves an O(cutoff^{-3}) truncation error. Oracle use only.
inline double multiplier_quadrature(double lambda, double tau, double eta, double cutoff, double step) {
  if (!(cutoff > 0.0) || !(step > 0.0)) throw std::invalid_argument("multiplier_quadrature: cutoff, step must be > 0");
  if (lambda == tau) throw singular_parameter_error("multiplier_quadrature: tau = lambda");
  using cd = std::complex<double>;
  const long long half = static_cast<long long>(std::ceil(cutoff / step));
  auto integrand = [&](double xi) {
    const cd ixi(0.0, xi);
    const cd denom = (ixi - tau - lambda) * (ixi - tau + lambda);
    const cd f = 1.0 / denom + 1.0 / (1.0 + xi * xi);
    return (f * std::exp(cd(0.0, eta * xi))).real();
  };
  double sum = 0.5 * (integrand(-half * step) + integrand(half * step));
  for (long long i = -half + 1; i < half; ++i) sum += integrand(static_cast<double>(i) * step);
  const double value = sum * step / (2.0 * std::numbers::pi) - 0.5 * std::exp(-std::abs(eta));
  if (!std::isfinite(value)) throw quadrature_failure("multiplier_quadrature: non-finite result");
  return value;
}

// ---------------------------------------------------------------------------
// Cluster envelopes

enum class EnvelopeRegime { constant_cluster, first_cluster, below_tau, near_tau, above_tau };

inline const char* to_string(EnvelopeRegime r) {
  switch (r) {
  case EnvelopeRegime::constant_cluster: return "k=0";
  case EnvelopeRegime::first_cluster: return "k=1";
  case EnvelopeRegime::below_tau: return "2<=k<=floor(tau)-2";
  case EnvelopeRegime::near_tau: return "|k-floor(tau)|<=1";
  case EnvelopeRegime::above_tau: return "k>=floor(tau)+2";
  }
  return "?";
}

/// Regimes are tried in the order listed, so they partition k >= 0.
inline EnvelopeRegime envelope_regime(int k, double tau) {
  if (k < 0) throw std::invalid_argument("envelope_regime: k must be >= 0");
  const int ft = static_cast<int>(std::floor(tau));
  if (k == 0) return EnvelopeRegime::constant_cluster;
  if (k == 1) return EnvelopeRegime::first_cluster;
  if (k <= ft - 2) return EnvelopeRegime::below_tau;
  if (k <= ft + 1) return EnvelopeRegime::near_tau;
  return EnvelopeRegime::above_tau;
}

/// Upper bound for max_{k <= lambda_j < k+1} |m_j(eta)| in cluster k.
/// k = 1 uses the final form e^{-2|eta|} of its chain of bounds.
inline double cluster_envelope(int k, double tau, double sigma, double eta) {
  if (!(tau > 0.0)) throw std::invalid_argument("cluster_envelope: tau must be > 0");
  const double a = std::abs(eta);
  switch (envelope_regime(k, tau)) {
  case EnvelopeRegime::constant_cluster: return std::exp(-0.5 * tau * a);
  case EnvelopeRegime::first_cluster: return std::exp(-2.0 * a);
  case EnvelopeRegime::below_tau: return std::exp(-(tau - 1.0 - k) * a) / k;
  case EnvelopeRegime::near_tau:
    if (!(sigma > 0.0)) throw std::invalid_argument("cluster_envelope: sigma must be > 0 near tau");
    return std::exp(-sigma * a) / k;
  case EnvelopeRegime::above_tau: return std::exp(-(k - tau) * a) / k;
  }
  return 0.0;
}

/// cluster_envelope after checking that lambda lies in cluster k and, for
/// the clusters next to tau, that sigma does not exceed |tau - lambda|.
inline double multiplier_envelope(int k, double lambda, double tau, double sigma, double eta) {
  if (!(lambda >= k && lambda < k + 1.0))
    throw std::invalid_argument("multiplier_envelope: lambda = " + std::to_string(lambda) + " not in cluster " +
                                std::to_string(k));
  if (envelope_regime(k, tau) == EnvelopeRegime::near_tau && std::abs(tau - lambda) < sigma)
    throw std::invalid_argument("multiplier_envelope: sigma exceeds |tau - lambda|");
  return cluster_envelope(k, tau, sigma, eta);
}

} // namespace carleman
