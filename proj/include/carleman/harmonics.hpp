#pragma once

// S^2 as a concrete transversal manifold: Gauss-Legendre x uniform grids,
// real spherical-harmonic analysis/synthesis, spectral-cluster projectors and
// L^q norms.
//
// Convention: fully normalized real harmonics without the Condon-Shortley
// phase,
//   Y_l^0  = N_l0 P_l(cos t)
//   Y_l^m  = sqrt(2) N_lm P_l^m(cos t) cos(m phi),   m > 0
//   Y_l^-m = sqrt(2) N_lm P_l^m(cos t) sin(m phi),   m > 0
// with N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!). Coefficient (l, m) lives at
// flat index l*l + l + m.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carleman/spectra.hpp"

namespace carleman {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

inline std::size_t sh_index(int l, int m) {
  return static_cast<std::size_t>(l * l + l + m);
}

inline std::size_t sh_count(int band_limit) {
  return static_cast<std::size_t>((band_limit + 1) * (band_limit + 1));
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count) {
  if (count < 1) throw std::invalid_argument("gauss_legendre: count must be >= 1");
  const auto n = static_cast<std::size_t>(count);
  std::vector<double> x(n);
  std::vector<double> w(n);
  // P_count(z) and its derivative by the three-term recurrence
  auto legendre = [count](double z) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (count == 1) p0 = 1.0;
    const double dp = count * (z * p1 - p0) / (z * z - 1.0);
    return std::pair{p1, dp};
  };
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (count + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double dp = legendre(z).second;
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return {std::move(x), std::move(w)};
}

/// Normalized associated Legendre values N_lm P_l^m(x) (no Condon-Shortley
/// phase) for 0 <= m <= l <= band_limit, stored at sh_index(l, m).
inline void normalized_legendre(int band_limit, double x, std::span<double> out) {
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  double pmm = std::sqrt(1.0 / four_pi);
  for (int m = 0; m <= band_limit; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    out[sh_index(m, m)] = pmm;
    if (m == band_limit) break;
    double p_lm2 = pmm;
    double p_lm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
    out[sh_index(m + 1, m)] = p_lm1;
    for (int l = m + 2; l <= band_limit; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      const double p = a * (x * p_lm1 - b * p_lm2);
      out[sh_index(l, m)] = p;
      p_lm2 = p_lm1;
      p_lm1 = p;
    }
  }
}

/// Product quadrature on S^2: Gauss-Legendre in cos(theta), uniform in phi.
/// Exact for polynomials of total degree <= quadrature_degree, hence for
/// products of harmonics of degree <= band_limit when quadrature_degree >=
/// 2 band_limit. Samples are stored ring by ring: index i * n_phi + k.
class SphereGrid {
public:
  SphereGrid(int band_limit, int quadrature_degree)
      : band_limit_(band_limit), quadrature_degree_(quadrature_degree) {
    if (band_limit < 0) throw std::invalid_argument("SphereGrid: band_limit must be >= 0");
    if (quadrature_degree < 2 * band_limit)
      throw std::invalid_argument("SphereGrid: quadrature_degree must be >= 2 * band_limit");
    n_theta_ = quadrature_degree / 2 + 1;
    n_phi_ = quadrature_degree + 1;
    auto [x, w] = gauss_legendre(n_theta_);
    cos_theta_ = std::move(x);
    theta_weights_ = std::move(w);
    phi_weight_ = 2.0 * std::numbers::pi / n_phi_;
    phi_.resize(static_cast<std::size_t>(n_phi_));
    for (int k = 0; k < n_phi_; ++k) phi_[static_cast<std::size_t>(k)] = phi_weight_ * k;

    const std::size_t stride = sh_count(band_limit_);
    legendre_.assign(static_cast<std::size_t>(n_theta_) * stride, 0.0);
    for (int i = 0; i < n_theta_; ++i)
      normalized_legendre(band_limit_, cos_theta_[static_cast<std::size_t>(i)],
                          std::span<double>(legendre_).subspan(static_cast<std::size_t>(i) * stride, stride));

    // cos(m phi_k), sin(m phi_k) tables
    trig_.assign(static_cast<std::size_t>(band_limit_ + 1) * static_cast<std::size_t>(n_phi_) * 2, 0.0);
    for (int m = 0; m <= band_limit_; ++m)
      for (int k = 0; k < n_phi_; ++k) {
        const double a = m * phi_[static_cast<std::size_t>(k)];
        trig_[trig_at(m, k, 0)] = std::cos(a);
        trig_[trig_at(m, k, 1)] = std::sin(a);
      }
  }

  int band_limit() const noexcept { return band_limit_; }
  int quadrature_degree() const noexcept { return quadrature_degree_; }
  int n_theta() const noexcept { return n_theta_; }
  int n_phi() const noexcept { return n_phi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_theta_) * static_cast<std::size_t>(n_phi_); }

  double cos_theta(int i) const { return cos_theta_.at(static_cast<std::size_t>(i)); }
  double theta(int i) const { return std::acos(cos_theta(i)); }
  double phi(int k) const { return phi_.at(static_cast<std::size_t>(k)); }
  double weight(int i, int /*k*/) const { return theta_weights_[static_cast<std::size_t>(i)] * phi_weight_; }
  double weight(std::size_t flat) const { return weight(static_cast<int>(flat / static_cast<std::size_t>(n_phi_)), 0); }
  double theta_weight(int i) const { return theta_weights_.at(static_cast<std::size_t>(i)); }
  double phi_weight() const noexcept { return phi_weight_; }

  /// N_lm P_l^m(cos theta_i), m >= 0.
  double legendre(int i, int l, int m) const {
    return legendre_[static_cast<std::size_t>(i) * sh_count(band_limit_) + sh_index(l, m)];
  }
  double cos_m_phi(int m, int k) const { return trig_[trig_at(m, k, 0)]; }
  double sin_m_phi(int m, int k) const { return trig_[trig_at(m, k, 1)]; }

  /// Real harmonic Y_l^m evaluated at grid node (i, k).
  double harmonic(int l, int m, int i, int k) const {
    if (m == 0) return legendre(i, l, 0);
    const double c = std::numbers::sqrt2 * legendre(i, l, std::abs(m));
    return m > 0 ? c * cos_m_phi(m, k) : c * sin_m_phi(-m, k);
  }

  double total_weight() const {
    double s = 0.0;
    for (double w : theta_weights_) s += w * phi_weight_ * n_phi_;
    return s;
  }

private:
  std::size_t trig_at(int m, int k, int which) const {
    return (static_cast<std::size_t>(m) * static_cast<std::size_t>(n_phi_) + static_cast<std::size_t>(k)) * 2 +
           static_cast<std::size_t>(which);
  }

  int band_limit_;
  int quadrature_degree_;
  int n_theta_ = 0;
  int n_phi_ = 0;
  std::vector<double> cos_theta_;
  std::vector<double> theta_weights_;
  std::vector<double> phi_;
  double phi_weight_ = 0.0;
  std::vector<double> legendre_;
  std::vector<double> trig_;
};

using SphereGridPtr = std::shared_ptr<const SphereGrid>;

/// Grid exact for products of harmonics up to band_limit. A larger
/// quadrature_degree oversamples, e.g. to integrate |f|^6 exactly.
inline SphereGridPtr build_grid(int band_limit, int quadrature_degree = -1) {
  if (band_limit < 0) throw std::invalid_argument("build_grid: band_limit must be >= 0");
  if (quadrature_degree < 0) quadrature_degree = 2 * band_limit;
  return std::make_shared<const SphereGrid>(band_limit, quadrature_degree);
}

/// Coefficients of a function on S^2 in the real harmonic basis.
struct SphereField {
  int band_limit = 0;
  std::vector<double> coeffs;
  SphereGridPtr grid;

  double coeff(int l, int m) const { return coeffs.at(sh_index(l, m)); }
  double& coeff(int l, int m) { return coeffs.at(sh_index(l, m)); }
};

inline SphereField zero_field(int band_limit, SphereGridPtr grid) {
  if (grid && grid->band_limit() < band_limit)
    throw std::invalid_argument("zero_field: grid band limit below field band limit");
  return {band_limit, std::vector<double>(sh_count(band_limit), 0.0), std::move(grid)};
}

inline SphereField harmonic_field(int l, int m, int band_limit, SphereGridPtr grid) {
  if (l < 0 || std::abs(m) > l || l > band_limit) throw std::invalid_argument("harmonic_field: bad (l, m)");
  auto f = zero_field(band_limit, std::move(grid));
  f.coeff(l, m) = 1.0;
  return f;
}

/// Samples of Y_l^m on the grid.
inline std::vector<double> harmonic_samples(int l, int m, const SphereGrid& grid) {
  if (l > grid.band_limit()) throw std::invalid_argument("harmonic_samples: degree above grid band limit");
  std::vector<double> out(grid.size());
  for (int i = 0; i < grid.n_theta(); ++i)
    for (int k = 0; k < grid.n_phi(); ++k)
      out[static_cast<std::size_t>(i * grid.n_phi() + k)] = grid.harmonic(l, m, i, k);
  return out;
}

/// Quadrature inner products (f | Y_l^m) for l <= band_limit.
inline SphereField analyze(std::span<const double> samples, int band_limit, const SphereGridPtr& grid) {
  if (!grid) throw std::invalid_argument("analyze: null grid");
  if (samples.size() != grid->size()) throw std::invalid_argument("analyze: sample count does not match grid");
  if (band_limit < 0 || band_limit > grid->band_limit())
    throw std::invalid_argument("analyze: band limit exceeds grid exactness");
  auto out = zero_field(band_limit, grid);
  const int n_phi = grid->n_phi();
  std::vector<double> a(static_cast<std::size_t>(band_limit + 1));
  std::vector<double> b(a.size());
  for (int i = 0; i < grid->n_theta(); ++i) {
    const auto ring = samples.subspan(static_cast<std::size_t>(i * n_phi), static_cast<std::size_t>(n_phi));
    for (int m = 0; m <= band_limit; ++m) {
      double sc = 0.0, ss = 0.0;
      for (int k = 0; k < n_phi; ++k) {
        sc += ring[static_cast<std::size_t>(k)] * grid->cos_m_phi(m, k);
        ss += ring[static_cast<std::size_t>(k)] * grid->sin_m_phi(m, k);
      }
      a[static_cast<std::size_t>(m)] = sc * grid->phi_weight() * grid->theta_weight(i);
      b[static_cast<std::size_t>(m)] = ss * grid->phi_weight() * grid->theta_weight(i);
    }
    for (int l = 0; l <= band_limit; ++l) {
      out.coeff(l, 0) += grid->legendre(i, l, 0) * a[0];
      for (int m = 1; m <= l; ++m) {
        const double p = std::numbers::sqrt2 * grid->legendre(i, l, m);
        out.coeff(l, m) += p * a[static_cast<std::size_t>(m)];
        out.coeff(l, -m) += p * b[static_cast<std::size_t>(m)];
      }
    }
  }
  return out;
}

inline std::vector<double> synthesize(const SphereField& f, const SphereGrid& grid) {
  if (f.band_limit > grid.band_limit()) throw std::invalid_argument("synthesize: field band limit exceeds grid");
  if (f.coeffs.size() != sh_count(f.band_limit)) throw std::invalid_argument("synthesize: malformed coefficients");
  const int n_phi = grid.n_phi();
  const int L = f.band_limit;
  std::vector<double> out(grid.size(), 0.0);
  std::vector<double> a(static_cast<std::size_t>(L + 1));
  std::vector<double> b(a.size());
  for (int i = 0; i < grid.n_theta(); ++i) {
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    for (int l = 0; l <= L; ++l) {
      a[0] += grid.legendre(i, l, 0) * f.coeff(l, 0);
      for (int m = 1; m <= l; ++m) {
        const double p = std::numbers::sqrt2 * grid.legendre(i, l, m);
        a[static_cast<std::size_t>(m)] += p * f.coeff(l, m);
        b[static_cast<std::size_t>(m)] += p * f.coeff(l, -m);
      }
    }
    for (int k = 0; k < n_phi; ++k) {
      double v = a[0];
      for (int m = 1; m <= L; ++m)
        v += a[static_cast<std::size_t>(m)] * grid.cos_m_phi(m, k) + b[static_cast<std::size_t>(m)] * grid.sin_m_phi(m, k);
      out[static_cast<std::size_t>(i * n_phi + k)] = v;
    }
  }
  return out;
}

inline std::vector<double> synthesize(const SphereField& f) {
  if (!f.grid) throw std::invalid_argument("synthesize: field has no grid");
  return synthesize(f, *f.grid);
}

/// (sum_i w_i |f_i|^p)^{1/p}.
inline double lp_norm_sphere(std::span<const double> samples, double p, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_sphere: p must be >= 1");
  if (samples.size() != grid.size()) throw std::invalid_argument("lp_norm_sphere: sample count does not match grid");
  double s = 0.0;
  const int n_phi = grid.n_phi();
  for (int i = 0; i < grid.n_theta(); ++i) {
    double ring = 0.0;
    for (int k = 0; k < n_phi; ++k) {
      const double v = std::abs(samples[static_cast<std::size_t>(i * n_phi + k)]);
      ring += p == 2.0 ? v * v : std::pow(v, p);
    }
    s += ring * grid.weight(i, 0);
  }
  return std::pow(s, 1.0 / p);
}

/// Coefficient-space inner product; both fields must share a band limit.
inline double inner_product(const SphereField& f, const SphereField& g) {
  if (f.coeffs.size() != g.coeffs.size()) throw std::invalid_argument("inner_product: band limit mismatch");
  double s = 0.0;
  for (std::size_t q = 0; q < f.coeffs.size(); ++q) s += f.coeffs[q] * g.coeffs[q];
  return s;
}

/// Indices j of the distinct eigenvalues with k <= lambda_j < k+1.
inline std::vector<int> cluster_members(int k, const Spectrum& s) {
  if (k < 0) throw std::invalid_argument("cluster_members: k must be >= 0");
  if (s.empty() || s.values().back() < k + 1.0)
    throw std::invalid_argument("cluster_members: truncated spectrum does not reach lambda = " +
                                std::to_string(k + 1));
  std::vector<int> out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double lam = s.value(j);
    if (lam >= k && lam < k + 1.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

/// Cluster projector pi_k on S^2: keeps the coefficients of degrees l with
/// k <= lambda_l < k+1 and zeroes the rest. The spectrum indexes degrees, so
/// its multiplicities must be the S^2 ones (2l+1).
inline SphereField project_cluster(const SphereField& f, int k, const Spectrum& s) {
  const auto members = cluster_members(k, s);
  for (std::size_t j = 0; j < s.size() && static_cast<int>(j) <= f.band_limit; ++j)
    if (s.multiplicity(j) != 2.0 * static_cast<double>(j) + 1.0)
      throw std::invalid_argument("project_cluster: spectrum is not indexed by S^2 harmonic degree");
  auto out = zero_field(f.band_limit, f.grid);
  for (int l : members) {
    if (l > f.band_limit) continue;
    for (int m = -l; m <= l; ++m) out.coeff(l, m) = f.coeff(l, m);
  }
  return out;
}

/// Writes "index coefficient" rows at 17 significant digits.
inline void write_field(std::ostream& out, const SphereField& f) {
  out.precision(17);
  for (std::size_t q = 0; q < f.coeffs.size(); ++q) out << q << ' ' << f.coeffs[q] << '\n';
}

// ---------------------------------------------------------------------------
// Empirical cluster constants

struct ClusterConstantRow {
  int k = 0;
  double up4_ratio = 0.0;  // max ||pi_k f||_{p'} / ||f||_2
  double up5_ratio = 0.0;  // max ||pi_k f||_2 / ||f||_p
  double up4_normalized = 0.0;  // up4_ratio / (1+k)^{1/p'}
  double up5_normalized = 0.0;
  bool holder_chain_holds = true;  // up5(f) <= up4(pi_k f) for every trial f
  int trial_functions = 0;
};

struct ClusterConstantTable {
  double p_prime = 0.0;
  int band_limit = 0;
  std::vector<ClusterConstantRow> rows;

  /// Largest normalized constants seen over all k; lower bounds for the
  /// generic constants of the two cluster estimates.
  double up4_constant() const {
    double c = 0.0;
    for (const auto& r : rows) c = std::max(c, r.up4_normalized);
    return c;
  }
  double up5_constant() const {
    double c = 0.0;
    for (const auto& r : rows) c = std::max(c, r.up5_normalized);
    return c;
  }
};

/// Deterministic per-trial engine: every (seed, stream ids...) tuple owns
/// an independent stream, so trials can be evaluated in any order.
template <class... Ids>
std::mt19937_64 trial_engine(std::uint64_t seed, Ids... ids) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ids)...};
  return std::mt19937_64(seq);
}

/// Sweeps clusters k = 0..k_max on S^2 and records, per k, the largest
/// observed ratios for both cluster estimates over a family of trial
/// functions: zonal Y_l^0 and sectoral Y_l^l for every l in the cluster,
/// random in-cluster combinations, and random full-band fields.
inline ClusterConstantTable estimate_cluster_constants(int k_max, double p_prime, int trials, std::uint64_t seed) {
  if (k_max < 0) throw std::invalid_argument("estimate_cluster_constants: k_max must be >= 0");
  if (trials <= 0) throw std::invalid_argument("estimate_cluster_constants: trials must be > 0");
  if (!(p_prime > 2.0)) throw std::invalid_argument("estimate_cluster_constants: p' must be > 2");
  const double p = p_prime / (p_prime - 1.0);
  const int band = k_max + 1;
  const Spectrum spec = sphere_spectrum(3, band + 2);
  const int degree = std::max(2 * band, static_cast<int>(std::ceil(p_prime)) * band);
  const auto grid = build_grid(band, degree);

  ClusterConstantTable table{p_prime, band, {}};
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int k = 0; k <= k_max; ++k) {
    const auto members = cluster_members(k, spec);
    ClusterConstantRow row;
    row.k = k;

    auto consider = [&](const SphereField& f) {
      const auto proj = project_cluster(f, k, spec);
      const auto f_samples = synthesize(f, *grid);
      const auto pf_samples = synthesize(proj, *grid);
      const double pf_2 = std::sqrt(inner_product(proj, proj));
      if (pf_2 == 0.0) return;
      const double f_2 = std::sqrt(inner_product(f, f));
      const double pf_pp = lp_norm_sphere(pf_samples, p_prime, *grid);
      const double f_p = lp_norm_sphere(f_samples, p, *grid);
      const double up4_f = pf_pp / f_2;
      const double up4_pf = pf_pp / pf_2;
      const double up5_f = pf_2 / f_p;
      row.up4_ratio = std::max({row.up4_ratio, up4_f, up4_pf});
      row.up5_ratio = std::max(row.up5_ratio, up5_f);
      // Hoelder: ||pi f||_2^2 = (pi f | f) <= ||pi f||_{p'} ||f||_p
      if (up5_f > up4_pf * (1.0 + 1e-12)) row.holder_chain_holds = false;
      ++row.trial_functions;
    };

    for (int l : members) {
      consider(harmonic_field(l, 0, band, grid));
      consider(harmonic_field(l, l, band, grid));
    }
    for (int t = 0; t < trials; ++t) {
      auto rng = trial_engine(seed, k, t, 0);
      auto f = zero_field(band, grid);
      for (int l : members)
        for (int m = -l; m <= l; ++m) f.coeff(l, m) = normal(rng);
      consider(f);
    }
    for (int t = 0; t < trials; ++t) {
      auto rng = trial_engine(seed, k, t, 1);
      auto f = zero_field(band, grid);
      for (double& c : f.coeffs) c = normal(rng);
      consider(f);
    }
    row.up4_normalized = row.up4_ratio / std::pow(1.0 + k, 1.0 / p_prime);
    row.up5_normalized = row.up5_ratio / std::pow(1.0 + k, 1.0 / p_prime);
    table.rows.push_back(row);
  }
  return table;
}

} // namespace carleman
