#pragma once

// Model spectra of the nonnegative Laplace-Beltrami operator on a closed
// transversal manifold, the gap constant, and the admissible parameter set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carleman/errors.hpp"

namespace carleman {

/// Distinct square roots lambda_j of the eigenvalues of -Delta', ascending,
/// with multiplicities.
///
/// Multiplicities are stored as doubles: harmonic dimensions on S^{n-1}
/// outgrow 64 bits for n = 8 near j = 10^4. Values are integral and exact
/// below 2^53, which covers every case where a field is actually built.
class Spectrum {
public:
  Spectrum() = default;

  Spectrum(std::vector<double> values, std::vector<double> multiplicities,
           std::string label = {})
      : values_(std::move(values)), multiplicities_(std::move(multiplicities)),
        label_(std::move(label)) {
    if (values_.size() != multiplicities_.size())
      throw std::invalid_argument("Spectrum: values/multiplicities size mismatch");
    for (std::size_t j = 0; j < values_.size(); ++j) {
      if (!std::isfinite(values_[j]) || values_[j] < 0.0)
        throw std::invalid_argument("Spectrum: negative or non-finite value at index " +
                                    std::to_string(j));
      if (j > 0 && !(values_[j] > values_[j - 1]))
        throw std::invalid_argument("Spectrum: values not strictly increasing at index " +
                                    std::to_string(j));
      if (!(multiplicities_[j] >= 1.0) || std::floor(multiplicities_[j]) != multiplicities_[j])
        throw std::invalid_argument("Spectrum: multiplicity must be a positive integer at index " +
                                    std::to_string(j));
    }
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& multiplicities() const noexcept { return multiplicities_; }
  const std::string& label() const noexcept { return label_; }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double value(std::size_t j) const { return values_.at(j); }
  double multiplicity(std::size_t j) const { return multiplicities_.at(j); }

  /// Total number of eigenfunctions (sum of multiplicities).
  double total_modes() const {
    return std::accumulate(multiplicities_.begin(), multiplicities_.end(), 0.0);
  }

private:
  std::vector<double> values_;
  std::vector<double> multiplicities_;
  std::string label_;
};

/// Dimension of degree-j spherical harmonics on S^{n-1}.
inline double sphere_harmonic_dimension(int n, int j) {
  if (n < 2 || j < 0) throw std::invalid_argument("sphere_harmonic_dimension: need n >= 2, j >= 0");
  if (n == 2) return j == 0 ? 1.0 : 2.0;
  // C(j+n-2, n-2) + C(j+n-3, n-2); both binomials built through integral
  // partial products so they stay exact while they fit the mantissa.
  auto binom = [](long long top, int r) -> long double {
    if (top < r) return 0.0L;
    long double c = 1.0L;
    for (int i = 1; i <= r; ++i) c = c * static_cast<long double>(top - r + i) / i;
    return std::round(c);
  };
  return static_cast<double>(binom(j + n - 2, n - 2) + binom(j + n - 3, n - 2));
}

inline double sphere_eigenvalue(int n, int j) {
  return std::sqrt(static_cast<double>(j) * static_cast<double>(j + n - 2));
}

/// Spectrum of -Delta on the unit sphere S^{n-1} in R^n, degrees 0..j_max.
inline Spectrum sphere_spectrum(int n, int j_max) {
  if (n < 2) throw std::invalid_argument("sphere_spectrum: n must be >= 2");
  if (j_max < 0) throw std::invalid_argument("sphere_spectrum: j_max must be >= 0");
  std::vector<double> values(static_cast<std::size_t>(j_max) + 1);
  std::vector<double> mult(values.size());
  for (int j = 0; j <= j_max; ++j) {
    values[static_cast<std::size_t>(j)] = sphere_eigenvalue(n, j);
    mult[static_cast<std::size_t>(j)] = sphere_harmonic_dimension(n, j);
  }
  return {std::move(values), std::move(mult), "sphere S^" + std::to_string(n - 1)};
}

inline Spectrum circle_spectrum(int j_max) {
  if (j_max < 0) throw std::invalid_argument("circle_spectrum: j_max must be >= 0");
  auto s = sphere_spectrum(2, j_max);
  return {s.values(), s.multiplicities(), "circle S^1"};
}

/// Parses "value multiplicity" rows; '#' starts a comment, blank lines are
/// skipped. Rows are numbered from 1 in errors.
inline Spectrum parse_spectrum(std::istream& in, std::string label = {}) {
  std::vector<double> values;
  std::vector<double> mult;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double value = 0.0;
    if (!(fields >> value)) {
      std::string rest;
      if (std::istringstream(line) >> rest) throw parse_error(row, "expected a numeric value");
      continue;
    }
    long long m = 0;
    if (!(fields >> m)) throw parse_error(row, "expected an integer multiplicity");
    std::string extra;
    if (fields >> extra) throw parse_error(row, "trailing content '" + extra + "'");
    if (!std::isfinite(value) || value < 0.0) throw parse_error(row, "negative value");
    if (m < 1) throw parse_error(row, "multiplicity must be >= 1");
    if (!values.empty()) {
      if (value == values.back()) throw parse_error(row, "duplicate value");
      if (value < values.back()) throw parse_error(row, "values not in ascending order");
    }
    values.push_back(value);
    mult.push_back(static_cast<double>(m));
  }
  return {std::move(values), std::move(mult), std::move(label)};
}

inline Spectrum load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path, "cannot open spectrum file");
  return parse_spectrum(in, "file:" + path);
}

/// Smallest gap between consecutive distinct values of the truncation.
///
/// The gap constant is an infimum over the whole sequence, so the minimum
/// over a finite prefix can only overestimate it. It is exact for the circle;
/// for spheres the gaps decrease monotonically toward 1.
inline double spectral_gap(const Spectrum& s) {
  if (s.size() < 2) throw std::invalid_argument("spectral_gap: need at least 2 distinct values");
  double kappa = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < s.size(); ++j) kappa = std::min(kappa, s.value(j + 1) - s.value(j));
  return kappa;
}

/// Lower bound (n-1)/(2n-3) on the sphere gap; n = 2 gives the circle's 1.
inline double sphere_gap_lower_bound(int n) {
  if (n < 2) throw std::invalid_argument("sphere_gap_lower_bound: n must be >= 2");
  return static_cast<double>(n - 1) / static_cast<double>(2 * n - 3);
}

struct Rational {
  long long num = 0;
  long long den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

inline Rational make_rational(long long num, long long den) {
  if (den == 0) throw std::invalid_argument("make_rational: zero denominator");
  if (den < 0) num = -num, den = -den;
  const long long g = std::gcd(num < 0 ? -num : num, den);
  return {num / g, den / g};
}

inline bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

/// tau(n) = max(4(n-1)/(n-2), n+1) in exact arithmetic.
inline Rational tau_min_exact(int n) {
  if (n < 3) throw std::invalid_argument("tau_min: n must be >= 3");
  const Rational a = make_rational(4LL * (n - 1), n - 2);
  const Rational b = make_rational(n + 1, 1);
  return a < b ? b : a;
}

inline double tau_min(int n) { return tau_min_exact(n).value(); }

/// Exponents and thresholds of the L^p - L^{p'} Carleman estimate in dimension n.
struct CarlemanParams {
  int n = 3;
  double tau = 0.0;
  double sigma = 0.0;
  double p = 0.0;        // 2n/(n+2)
  double p_prime = 0.0;  // 2n/(n-2)
  double alpha = 0.0;    // 1 - 2/p'
  double tau_min = 0.0;  // tau(n)

  /// 2/p', the exponent of sigma and of the fractional kernel |t|^{-2/p'}.
  double kernel_exponent() const { return 2.0 / p_prime; }
};

inline CarlemanParams make_params(int n, double tau, double sigma) {
  if (n < 3) throw std::invalid_argument("make_params: n must be >= 3");
  if (!(sigma > 0.0)) throw std::invalid_argument("make_params: sigma must be > 0");
  CarlemanParams c;
  c.n = n;
  c.tau = tau;
  c.sigma = sigma;
  c.p = 2.0 * n / (n + 2.0);
  c.p_prime = 2.0 * n / (n - 2.0);
  c.alpha = 1.0 - 2.0 / c.p_prime;
  c.tau_min = tau_min(n);
  return c;
}

/// min_j | x - lambda_j | over the truncation.
inline double distance_to_spectrum(double x, const Spectrum& s) {
  if (s.empty()) throw std::invalid_argument("distance_to_spectrum: empty spectrum");
  const auto& v = s.values();
  auto it = std::lower_bound(v.begin(), v.end(), x);
  double d = std::numeric_limits<double>::infinity();
  if (it != v.end()) d = std::min(d, std::abs(*it - x));
  if (it != v.begin()) d = std::min(d, std::abs(*std::prev(it) - x));
  return d;
}

/// Membership of tau in the admissible set: |tau| >= tau(n) and |tau| keeps
/// distance >= sigma from every lambda_j of the truncation. Whether sigma
/// respects sigma <= kappa/2 is the caller's concern (see sigma_within_half_gap).
inline bool is_admissible(double tau, const Spectrum& s, double sigma, int n) {
  if (s.empty()) throw std::invalid_argument("is_admissible: empty spectrum");
  if (!(sigma > 0.0)) throw std::invalid_argument("is_admissible: sigma must be > 0");
  const double a = std::abs(tau);
  return a >= tau_min(n) && distance_to_spectrum(a, s) >= sigma;
}

inline bool sigma_within_half_gap(double sigma, const Spectrum& s) {
  return sigma <= 0.5 * spectral_gap(s);
}

} // namespace carleman
