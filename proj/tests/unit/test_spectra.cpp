#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "carleman/spectra.hpp"

using namespace carleman;

namespace {

// Independent count: dimension of harmonic homogeneous polynomials of degree
// j in n variables, dim P_j - dim P_{j-2} with dim P_j = C(j+n-1, n-1).
double harmonic_dimension_oracle(int n, int j) {
  auto poly = [n](int d) -> double {
    if (d < 0) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= n - 1; ++i) c = c * (d + i) / i;
    return std::round(c);
  };
  return poly(j) - poly(j - 2);
}

Spectrum parse(const std::string& text) {
  std::istringstream in(text);
  return parse_spectrum(in, "test");
}

} // namespace

TEST(SphereSpectrum, ValuesForTwoSphere) {
  const auto s = sphere_spectrum(3, 3);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s.value(0), 0.0);
  EXPECT_NEAR(s.value(1), 1.414214, 1e-6);
  EXPECT_NEAR(s.value(2), 2.449490, 1e-6);
  EXPECT_NEAR(s.value(3), 3.464102, 1e-6);
}

TEST(SphereSpectrum, MultiplicitiesMatchSphericalHarmonicCount) {
  const auto s = sphere_spectrum(3, 3);
  for (int j = 0; j <= 3; ++j) EXPECT_EQ(s.multiplicity(static_cast<std::size_t>(j)), 2.0 * j + 1.0);
}

TEST(SphereSpectrum, MultiplicitiesMatchPolynomialCountInHigherDimensions) {
  for (int n = 3; n <= 8; ++n) {
    const auto s = sphere_spectrum(n, 30);
    for (int j = 0; j <= 30; ++j)
      EXPECT_EQ(s.multiplicity(static_cast<std::size_t>(j)), harmonic_dimension_oracle(n, j)) << n << " " << j;
  }
}

TEST(SphereSpectrum, CircleCase) {
  const auto s = sphere_spectrum(2, 2);
  EXPECT_EQ(s.values(), (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(SphereSpectrum, RejectsBadArguments) {
  EXPECT_THROW(sphere_spectrum(1, 3), std::invalid_argument);
  EXPECT_THROW(sphere_spectrum(3, -1), std::invalid_argument);
}

TEST(SphereSpectrum, LargeMultiplicitiesStayFinite) {
  const auto s = sphere_spectrum(8, 10000);
  EXPECT_TRUE(std::isfinite(s.multiplicities().back()));
  EXPECT_GT(s.multiplicities().back(), 1e19);
}

TEST(CircleSpectrum, Examples) {
  const auto zero = circle_spectrum(0);
  EXPECT_EQ(zero.values(), std::vector<double>{0.0});
  EXPECT_EQ(zero.multiplicities(), std::vector<double>{1.0});
  const auto s = circle_spectrum(3);
  EXPECT_EQ(s.values(), (std::vector<double>{0, 1, 2, 3}));
  EXPECT_EQ(s.multiplicities(), (std::vector<double>{1, 2, 2, 2}));
  EXPECT_THROW(circle_spectrum(-1), std::invalid_argument);
}

TEST(LoadSpectrum, ParsesRows) {
  const auto s = parse("0 1\n1.5 2");
  EXPECT_EQ(s.values(), (std::vector<double>{0.0, 1.5}));
  EXPECT_EQ(s.multiplicities(), (std::vector<double>{1.0, 2.0}));
}

TEST(LoadSpectrum, CommentsAndBlankLines) {
  const auto s = parse("# header\n\n0 1   # constant\n  \n2 3\n");
  EXPECT_EQ(s.size(), 2u);
}

TEST(LoadSpectrum, DuplicateIsParseErrorWithRow) {
  try {
    parse("0 1\n0 2");
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(LoadSpectrum, UnsortedAndNegativeRejected) {
  EXPECT_THROW(parse("2.0 1\n1.0 1"), parse_error);
  EXPECT_THROW(parse("-1 1"), parse_error);
  EXPECT_THROW(parse("1 0"), parse_error);
  EXPECT_THROW(parse("1 x"), parse_error);
  EXPECT_THROW(parse("abc"), parse_error);
}

TEST(LoadSpectrum, MissingFileIsIoError) {
  EXPECT_THROW(load_spectrum("/nonexistent/spectrum.txt"), io_error);
}

TEST(SpectralGap, CircleIsExactlyOne) {
  EXPECT_EQ(spectral_gap(circle_spectrum(100)), 1.0);
  for (int j : {1, 2, 17, 1000}) EXPECT_EQ(spectral_gap(circle_spectrum(j)), 1.0);
}

TEST(SpectralGap, TwoSphereApproachesOneFromAbove) {
  const auto s = sphere_spectrum(3, 1000);
  // oracle: scan every consecutive gap directly from the formula
  double oracle = 1e300;
  for (int j = 0; j < 1000; ++j)
    oracle = std::min(oracle, std::sqrt((j + 1.0) * (j + 2.0)) - std::sqrt(j * (j + 1.0)));
  const double k = spectral_gap(s);
  EXPECT_NEAR(k, oracle, 1e-12);
  EXPECT_GT(k, 1.0);
  EXPECT_LE(k, std::sqrt(2.0));
  EXPECT_LT(spectral_gap(sphere_spectrum(3, 2000)), k);
}

TEST(SpectralGap, LowerBoundForSpheres) {
  EXPECT_GE(spectral_gap(sphere_spectrum(4, 1000)), 3.0 / 5.0);
  for (int n = 3; n <= 8; ++n)
    for (int j_max : {1, 5, 50, 500})
      EXPECT_GE(spectral_gap(sphere_spectrum(n, j_max)), sphere_gap_lower_bound(n)) << n << " " << j_max;
}

TEST(SpectralGap, NeedsTwoValues) {
  EXPECT_THROW(spectral_gap(circle_spectrum(0)), std::invalid_argument);
}

TEST(TauMin, Table) {
  EXPECT_EQ(tau_min(3), 8.0);
  EXPECT_EQ(tau_min(6), 7.0);
  EXPECT_EQ(tau_min(4), 6.0);
  EXPECT_EQ(tau_min_exact(5), make_rational(6, 1));
  EXPECT_EQ(tau_min_exact(3), make_rational(8, 1));
  EXPECT_THROW(tau_min(2), std::invalid_argument);
}

TEST(TauMin, ExceedsFive) {
  for (int n = 3; n <= 200; ++n) EXPECT_TRUE(make_rational(5, 1) < tau_min_exact(n)) << n;
}

TEST(Params, ExponentsAreConjugate) {
  for (int n = 3; n <= 12; ++n) {
    const auto c = make_params(n, 10.0, 0.25);
    EXPECT_NEAR(1.0 / c.p + 1.0 / c.p_prime, 1.0, 1e-15);
    EXPECT_GT(c.alpha, 0.0);
    EXPECT_LT(c.alpha, 1.0);
  }
  const auto c = make_params(3, 9.0, 0.25);
  EXPECT_DOUBLE_EQ(c.p, 1.2);
  EXPECT_DOUBLE_EQ(c.p_prime, 6.0);
  EXPECT_DOUBLE_EQ(c.kernel_exponent(), 1.0 / 3.0);
}

TEST(Admissible, Examples) {
  const auto s = sphere_spectrum(3, 50);
  EXPECT_FALSE(is_admissible(8.5, s, 0.5, 3));
  EXPECT_TRUE(is_admissible(9.0, s, 0.25, 3));
  EXPECT_TRUE(is_admissible(-9.0, s, 0.25, 3));
  EXPECT_NEAR(distance_to_spectrum(8.5, s), 8.5 - std::sqrt(72.0), 1e-15);
  EXPECT_FALSE(is_admissible(7.9, s, 0.01, 3));  // below tau(3)
  EXPECT_THROW(is_admissible(9.0, Spectrum{}, 0.25, 3), std::invalid_argument);
}

TEST(Admissible, SymmetricInTau) {
  const auto s = sphere_spectrum(3, 60);
  for (double tau = 0.0; tau < 50.0; tau += 0.037)
    for (double sigma : {0.05, 0.25, 0.5})
      EXPECT_EQ(is_admissible(tau, s, sigma, 3), is_admissible(-tau, s, sigma, 3));
}

TEST(Admissible, SigmaHalfGap) {
  const auto s = sphere_spectrum(3, 100);
  EXPECT_TRUE(sigma_within_half_gap(0.5, s));
  EXPECT_FALSE(sigma_within_half_gap(0.6, s));
}
