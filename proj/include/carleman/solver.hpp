#pragma once

// Fields on R x M' stored as time profiles of the eigenmode coefficients,
// the conjugated operator e^{tau t} Delta e^{-tau t}, and its mode-by-mode
// inverse by convolution with the resolvent multiplier.

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carleman/errors.hpp"
#include "carleman/harmonics.hpp"
#include "carleman/multiplier.hpp"
#include "carleman/spectra.hpp"

namespace carleman {

/// Uniform nodes -T, -T+h, ..., T.
class TimeGrid {
public:
  TimeGrid() = default;
  TimeGrid(double half_width, double step) : half_width_(half_width), step_(step) {
    if (!(half_width > 0.0) || !(step > 0.0)) throw std::invalid_argument("TimeGrid: T and h must be > 0");
    const double cells = 2.0 * half_width / step;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
      throw std::invalid_argument("TimeGrid: 2T/h must be an integer");
    size_ = static_cast<std::size_t>(rounded) + 1;
  }

  double half_width() const noexcept { return half_width_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return size_; }
  double node(std::size_t i) const { return -half_width_ + step_ * static_cast<double>(i); }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.size_ == b.size_ && a.step_ == b.step_;
  }

private:
  double half_width_ = 0.0;
  double step_ = 0.0;
  std::size_t size_ = 0;
};

using SpectrumPtr = std::shared_ptr<const Spectrum>;

/// Flat mode q <-> (distinct eigenvalue j, multiplicity slot). On S^2 the
/// flat index coincides with sh_index(l, slot - l).
struct ModeIndex {
  std::size_t distinct = 0;
  std::size_t slot = 0;
};

/// A function on R x M' as per-eigenfunction time profiles. A mode with an
/// empty profile is identically zero.
class ProductField {
public:
  ProductField(TimeGrid grid, SpectrumPtr spectrum, CarlemanParams params)
      : grid_(grid), spectrum_(std::move(spectrum)), params_(params) {
    if (!spectrum_ || spectrum_->empty()) throw std::invalid_argument("ProductField: empty spectrum");
    const double total = spectrum_->total_modes();
    if (total > 1e7) throw std::invalid_argument("ProductField: spectrum truncation has too many modes");
    offsets_.reserve(spectrum_->size() + 1);
    std::size_t acc = 0;
    for (std::size_t j = 0; j < spectrum_->size(); ++j) {
      offsets_.push_back(acc);
      acc += static_cast<std::size_t>(spectrum_->multiplicity(j));
    }
    offsets_.push_back(acc);
    values_.resize(acc);
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const Spectrum& spectrum() const noexcept { return *spectrum_; }
  const SpectrumPtr& spectrum_ptr() const noexcept { return spectrum_; }
  const CarlemanParams& params() const noexcept { return params_; }
  std::size_t num_modes() const noexcept { return values_.size(); }

  std::size_t flat_index(std::size_t distinct, std::size_t slot) const {
    if (distinct >= spectrum_->size() || slot >= offsets_[distinct + 1] - offsets_[distinct])
      throw std::out_of_range("ProductField: mode index out of range");
    return offsets_[distinct] + slot;
  }

  ModeIndex mode(std::size_t q) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), q);
    const auto j = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {j, q - offsets_[j]};
  }

  double lambda(std::size_t q) const { return spectrum_->value(mode(q).distinct); }

  bool is_zero(std::size_t q) const { return values_.at(q).empty(); }
  std::span<const double> profile(std::size_t q) const { return values_.at(q); }

  void set_profile(std::size_t q, std::vector<double> v) {
    if (!v.empty() && v.size() != grid_.size()) throw std::invalid_argument("ProductField: profile length mismatch");
    values_.at(q) = std::move(v);
  }

  /// Writable profile; materializes zeros for an empty mode.
  std::vector<double>& mutable_profile(std::size_t q) {
    auto& v = values_.at(q);
    if (v.empty()) v.assign(grid_.size(), 0.0);
    return v;
  }

  std::vector<std::size_t> nonzero_modes() const {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < values_.size(); ++q)
      if (!values_[q].empty()) out.push_back(q);
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_)
      for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  /// Largest coefficient magnitude at t = +-T relative to the global max;
  /// the compact-support surrogate asks for <= 1e-10.
  double boundary_ratio() const {
    const double m = max_abs();
    if (m == 0.0) return 0.0;
    double b = 0.0;
    for (const auto& v : values_)
      if (!v.empty()) b = std::max({b, std::abs(v.front()), std::abs(v.back())});
    return b / m;
  }

  bool satisfies_support(double tolerance = 1e-10) const { return boundary_ratio() <= tolerance; }

  ProductField scaled(double c) const {
    ProductField out = *this;
    for (auto& v : out.values_)
      for (double& x : v) x *= c;
    return out;
  }

private:
  TimeGrid grid_;
  SpectrumPtr spectrum_;
  CarlemanParams params_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<double>> values_;
};

inline ProductField linear_combination(double a, const ProductField& u, double b, const ProductField& v) {
  if (!(u.grid() == v.grid()) || u.num_modes() != v.num_modes())
    throw std::invalid_argument("linear_combination: incompatible fields");
  ProductField out(u.grid(), u.spectrum_ptr(), u.params());
  for (std::size_t q = 0; q < u.num_modes(); ++q) {
    if (u.is_zero(q) && v.is_zero(q)) continue;
    auto& w = out.mutable_profile(q);
    if (!u.is_zero(q))
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += a * u.profile(q)[i];
    if (!v.is_zero(q))
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += b * v.profile(q)[i];
  }
  return out;
}

/// Largest admissible |tau| h for the finite-difference stencils.
inline constexpr double max_tau_step = 0.2;

namespace detail {

/// 4th-order central first and second differences with zero extension
/// outside the grid.
inline void central_differences(std::span<const double> u, double h, std::vector<double>& d1,
                                std::vector<double>& d2) {
  const std::size_t n = u.size();
  d1.assign(n, 0.0);
  d2.assign(n, 0.0);
  auto at = [&](long long i) { return i < 0 || i >= static_cast<long long>(n) ? 0.0 : u[static_cast<std::size_t>(i)]; };
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<long long>(k);
    const double um2 = at(i - 2), um1 = at(i - 1), u0 = u[k], up1 = at(i + 1), up2 = at(i + 2);
    d1[k] = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * h);
    d2[k] = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h);
  }
}

} // namespace detail

/// f_j = u_j'' - 2 tau u_j' + (tau^2 - lambda_j^2) u_j for every mode, the
/// modal form of e^{tau t}(d_t^2 + Delta') e^{-tau t} u.
inline ProductField conjugated_apply(const ProductField& u, double tau) {
  const double h = u.grid().step();
  if (std::abs(tau) * h > max_tau_step * (1.0 + 1e-12))
    throw resolution_error("conjugated_apply: |tau| h = " + std::to_string(std::abs(tau) * h) + " exceeds " +
                           std::to_string(max_tau_step));
  ProductField f(u.grid(), u.spectrum_ptr(), u.params());
  std::vector<double> d1, d2;
  for (std::size_t q : u.nonzero_modes()) {
    const auto prof = u.profile(q);
    detail::central_differences(prof, h, d1, d2);
    const double lam = u.lambda(q);
    const double c0 = tau * tau - lam * lam;
    std::vector<double> out(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) out[i] = d2[i] - 2.0 * tau * d1[i] + c0 * prof[i];
    f.set_profile(q, std::move(out));
  }
  return f;
}

/// sum_t h sum_q u_q(t)^2, the squared L^2(R x M') norm via Parseval.
inline double l2_norm_squared(const ProductField& u) {
  double s = 0.0;
  for (std::size_t q : u.nonzero_modes())
    for (double x : u.profile(q)) s += x * x;
  return s * u.grid().step();
}

inline double l2_norm(const ProductField& u) { return std::sqrt(l2_norm_squared(u)); }

namespace detail {

/// u_i = sum_k w_k m((i - k) h) f_k + (h^2/12) J f_i on a uniform grid, with
/// J = m'(0+) - m'(0-). Every kernel piece is a (|eta|^power) exponential,
/// so each one is a first- or second-order recursion. The last term is the
/// Euler-Maclaurin correction for the kink of m at eta = 0.
inline std::vector<double> convolve_kernel(const MultiplierKernel& kernel, std::span<const double> f, double h,
                                           std::span<const double> weights) {
  const std::size_t n = f.size();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = weights[i] * f[i];
  std::vector<double> u(n, 0.0);
  const double m0 = kernel(0.0);
  const double jump = kernel.derivative_jump();
  for (std::size_t i = 0; i < n; ++i) u[i] = m0 * g[i] + h * h / 12.0 * jump * f[i];

  for (const auto& piece : kernel.pieces()) {
    const double q = std::exp(-piece.decay * h);
    double s0 = 0.0, s1 = 0.0;  // sum_d q^d g, sum_d d q^d g over d >= 1
    auto step = [&](std::size_t neighbour) {
      s1 = q * (g[neighbour] + s1 + s0);
      s0 = q * (g[neighbour] + s0);
    };
    auto value = [&] { return piece.coefficient * (piece.power == 0 ? s0 : h * s1); };
    if (piece.side == HalfLine::negative) {
      // eta = t_i - s_k < 0: contributions from k > i
      for (std::size_t r = n; r-- > 0;) {
        u[r] += value();
        if (r > 0) step(r);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += value();
        if (i + 1 < n) step(i);
      }
    }
  }
  return u;
}

inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  if (n > 0) w.front() = w.back() = 0.5 * h;
  return w;
}

inline ProductField reflect_time(const ProductField& u) {
  ProductField out(u.grid(), u.spectrum_ptr(), u.params());
  for (std::size_t q : u.nonzero_modes()) {
    const auto p = u.profile(q);
    out.set_profile(q, std::vector<double>(p.rbegin(), p.rend()));
  }
  return out;
}

} // namespace detail

struct SolveOptions {
  /// Extend the output window by L = 20/min(sigma, 1) on both sides so the
  /// exponential tails of the solution are captured.
  bool extend_tails = true;
  /// Residual tolerance is tolerance_constant * h^2.
  double tolerance_constant = 1.0;
  /// Skip the admissibility test (diagnostics only).
  bool require_admissible = true;
};

inline double solve_tolerance(double h, const SolveOptions& options = {}) {
  return options.tolerance_constant * h * h;
}

inline double tail_length(double sigma) { return 20.0 / std::min(sigma, 1.0); }

/// Zero-pads u symmetrically onto a grid with the same step and half-width
/// T + extra (extra rounded up to whole steps).
inline ProductField pad_time(const ProductField& u, double extra) {
  const double h = u.grid().step();
  const auto pad = static_cast<std::size_t>(std::ceil(extra / h - 1e-9));
  const TimeGrid grid(u.grid().half_width() + static_cast<double>(pad) * h, h);
  ProductField out(grid, u.spectrum_ptr(), u.params());
  for (std::size_t q : u.nonzero_modes()) {
    std::vector<double> v(grid.size(), 0.0);
    std::copy(u.profile(q).begin(), u.profile(q).end(), v.begin() + static_cast<std::ptrdiff_t>(pad));
    out.set_profile(q, std::move(v));
  }
  return out;
}

/// Restricts u to the centered window of `grid` (same step).
inline ProductField crop_time(const ProductField& u, const TimeGrid& grid) {
  if (grid.step() != u.grid().step() || grid.size() > u.grid().size())
    throw std::invalid_argument("crop_time: incompatible grids");
  const std::size_t off = (u.grid().size() - grid.size()) / 2;
  ProductField out(grid, u.spectrum_ptr(), u.params());
  for (std::size_t q : u.nonzero_modes()) {
    const auto p = u.profile(q);
    out.set_profile(q, std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(off),
                                           p.begin() + static_cast<std::ptrdiff_t>(off + grid.size())));
  }
  return out;
}

struct SolveResult {
  ProductField u;
  double residual = 0.0;   // ||apply(u) - f||_2 / ||f||_2 on the output window
  double tolerance = 0.0;
};

/// Inverts the conjugated operator mode by mode: u_j = m_j * f_j with the
/// closed-form multiplier. Negative tau is reduced to |tau| by reflecting
/// time. Throws admissibility_error for tau outside the admissible set of
/// f's spectrum (with f.params().sigma, f.params().n) and convergence_error
/// when the residual exceeds C h^2.
inline SolveResult solve_conjugated_detailed(const ProductField& f, double tau, const SolveOptions& options = {}) {
  const auto& params = f.params();
  if (options.require_admissible && !is_admissible(tau, f.spectrum(), params.sigma, params.n))
    throw admissibility_error("solve_conjugated: tau = " + std::to_string(tau) +
                              " is not admissible (sigma = " + std::to_string(params.sigma) + ")");
  if (tau < 0.0) {
    auto r = solve_conjugated_detailed(detail::reflect_time(f), -tau, options);
    r.u = detail::reflect_time(r.u);
    return r;
  }
  if (!(tau > 0.0)) throw std::invalid_argument("solve_conjugated: tau must be nonzero");

  const double h = f.grid().step();
  const ProductField source = options.extend_tails ? pad_time(f, tail_length(params.sigma)) : f;
  const auto weights = detail::trapezoid_weights(source.grid().size(), h);
  ProductField u(source.grid(), source.spectrum_ptr(), source.params());
  for (std::size_t q : source.nonzero_modes()) {
    const MultiplierKernel kernel(source.lambda(q), tau);
    u.set_profile(q, detail::convolve_kernel(kernel, source.profile(q), h, weights));
  }

  SolveResult result{std::move(u), 0.0, solve_tolerance(h, options)};
  const double fn = l2_norm(source);
  if (fn > 0.0) {
    const auto back = conjugated_apply(result.u, tau);
    result.residual = l2_norm(linear_combination(1.0, back, -1.0, source)) / fn;
    if (!(result.residual <= result.tolerance))
      throw convergence_error("solve_conjugated: residual above tolerance at h = " + std::to_string(h),
                              result.residual, result.tolerance);
  }
  return result;
}

inline ProductField solve_conjugated(const ProductField& f, double tau, const SolveOptions& options = {}) {
  return solve_conjugated_detailed(f, tau, options).u;
}

// ---------------------------------------------------------------------------
// Physical norms on R x S^2

namespace detail {

inline void require_sphere_modes(const ProductField& u, const SphereGrid& grid) {
  const auto& s = u.spectrum();
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s.multiplicity(j) != 2.0 * static_cast<double>(j) + 1.0)
      throw std::invalid_argument("product_lp_norm: spectrum is not the S^2 spectrum");
  for (std::size_t q : u.nonzero_modes())
    if (static_cast<int>(u.mode(q).distinct) > grid.band_limit())
      throw std::invalid_argument("product_lp_norm: field degree exceeds sphere grid band limit");
}

/// If every nonzero profile is a multiple of one common profile, returns
/// that profile and the per-mode multipliers.
inline std::optional<std::pair<std::vector<double>, std::vector<std::pair<std::size_t, double>>>>
separable_form(const ProductField& u) {
  const auto modes = u.nonzero_modes();
  if (modes.empty()) return std::nullopt;
  const auto base = u.profile(modes.front());
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < base.size(); ++i)
    if (std::abs(base[i]) > std::abs(base[pivot])) pivot = i;
  if (base[pivot] == 0.0) return std::nullopt;
  std::vector<std::pair<std::size_t, double>> factors;
  for (std::size_t q : modes) {
    const auto p = u.profile(q);
    const double c = p[pivot] / base[pivot];
    for (std::size_t i = 0; i < p.size(); ++i)
      if (std::abs(p[i] - c * base[i]) > 1e-14 * std::abs(base[pivot]) * std::max(1.0, std::abs(c)))
        return std::nullopt;
    factors.emplace_back(q, c);
  }
  return std::pair{std::vector<double>(base.begin(), base.end()), std::move(factors)};
}

} // namespace detail

/// Samples of u(t_i, .) on the sphere grid.
inline std::vector<double> slice_samples(const ProductField& u, std::size_t t_index, const SphereGrid& grid,
                                         const std::vector<std::vector<double>>& basis) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t q : u.nonzero_modes()) {
    const double c = u.profile(q)[t_index];
    if (c == 0.0) continue;
    const auto& y = basis[q];
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += c * y[x];
  }
  return out;
}

/// Grid samples of every nonzero mode's eigenfunction, indexed by flat mode.
inline std::vector<std::vector<double>> mode_basis(const ProductField& u, const SphereGrid& grid) {
  detail::require_sphere_modes(u, grid);
  std::vector<std::vector<double>> basis(u.num_modes());
  for (std::size_t q : u.nonzero_modes()) {
    const auto mi = u.mode(q);
    const int l = static_cast<int>(mi.distinct);
    basis[q] = harmonic_samples(l, static_cast<int>(mi.slot) - l, grid);
  }
  return basis;
}

/// ||u(t_i, .)||_{L^p(S^2)} for every time node.
inline std::vector<double> slice_lp_norms(const ProductField& u, double p, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("slice_lp_norms: p must be >= 1");
  const auto basis = mode_basis(u, grid);
  std::vector<double> out(u.grid().size(), 0.0);
  if (u.nonzero_modes().empty()) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lp_norm_sphere(slice_samples(u, i, grid, basis), p, grid);
  return out;
}

/// (sum_t h sum_x w_x |u(t, x)|^p)^{1/p} on R x S^2. Separable fields
/// g(t) F(x) use the exact factorization ||g||_p ||F||_p of the discrete
/// product quadrature.
inline double product_lp_norm(const ProductField& u, double p, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("product_lp_norm: p must be >= 1");
  const double h = u.grid().step();
  detail::require_sphere_modes(u, grid);
  if (u.nonzero_modes().empty()) return 0.0;
  if (auto sep = detail::separable_form(u)) {
    auto f = zero_field(grid.band_limit(), nullptr);
    for (auto [q, c] : sep->second) f.coeffs[q] += c;
    const double sphere = lp_norm_sphere(synthesize(f, grid), p, grid);
    double line = 0.0;
    for (double g : sep->first) line += std::pow(std::abs(g), p);
    return std::pow(line * h, 1.0 / p) * sphere;
  }
  const auto basis = mode_basis(u, grid);
  double s = 0.0;
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    const double v = lp_norm_sphere(slice_samples(u, i, grid, basis), p, grid);
    s += std::pow(v, p);
  }
  return std::pow(s * h, 1.0 / p);
}

/// Same norm from raw samples laid out [t][x].
inline double product_lp_norm(std::span<const double> samples, double p, double h, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw std::invalid_argument("product_lp_norm: p must be >= 1");
  if (samples.size() % grid.size() != 0) throw std::invalid_argument("product_lp_norm: sample count mismatch");
  double s = 0.0;
  for (std::size_t off = 0; off < samples.size(); off += grid.size())
    s += std::pow(lp_norm_sphere(samples.subspan(off, grid.size()), p, grid), p);
  return std::pow(s * h, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Text import/export
//
//   # carleman product field
//   T <half-width>
//   h <step>
//   n <dimension> tau <tau> sigma <sigma>
//   lambda <lambda_0> <mult_0>      (one line per distinct eigenvalue)
//   ...
//   data
//   <mode_index> <t_index> <value>  (nonzero modes only)

inline void write_product_field(std::ostream& out, const ProductField& u) {
  out.precision(17);
  out << "# carleman product field\n";
  out << "T " << u.grid().half_width() << "\nh " << u.grid().step() << '\n';
  out << "n " << u.params().n << " tau " << u.params().tau << " sigma " << u.params().sigma << '\n';
  for (std::size_t j = 0; j < u.spectrum().size(); ++j)
    out << "lambda " << u.spectrum().value(j) << ' ' << u.spectrum().multiplicity(j) << '\n';
  out << "data\n";
  for (std::size_t q : u.nonzero_modes()) {
    const auto p = u.profile(q);
    for (std::size_t i = 0; i < p.size(); ++i) out << q << ' ' << i << ' ' << p[i] << '\n';
  }
}

inline ProductField read_product_field(std::istream& in) {
  double T = 0.0, h = 0.0, tau = 0.0, sigma = 1.0;
  int n = 3;
  std::vector<double> values, mult;
  std::string line;
  std::size_t row = 0;
  bool in_data = false;
  std::optional<ProductField> field;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    if (!in_data) {
      std::string key;
      ss >> key;
      if (key == "T") ss >> T;
      else if (key == "h") ss >> h;
      else if (key == "n") {
        std::string k2, k3;
        ss >> n >> k2 >> tau >> k3 >> sigma;
        if (k2 != "tau" || k3 != "sigma") throw parse_error(row, "malformed parameter line");
      } else if (key == "lambda") {
        double v = 0.0, m = 0.0;
        if (!(ss >> v >> m)) throw parse_error(row, "malformed lambda line");
        values.push_back(v);
        mult.push_back(m);
      } else if (key == "data") {
        in_data = true;
        auto spec = std::make_shared<const Spectrum>(values, mult, "imported");
        field.emplace(TimeGrid(T, h), spec, make_params(n, tau, sigma));
      } else {
        throw parse_error(row, "unknown header key '" + key + "'");
      }
      if (ss.fail()) throw parse_error(row, "malformed header line");
      continue;
    }
    std::size_t q = 0, i = 0;
    double v = 0.0;
    if (!(ss >> q >> i >> v)) throw parse_error(row, "expected 'mode_index t_index value'");
    if (q >= field->num_modes() || i >= field->grid().size()) throw parse_error(row, "index out of range");
    field->mutable_profile(q)[i] = v;
  }
  if (!field) throw parse_error(row, "missing data section");
  return std::move(*field);
}

} // namespace carleman
