#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "carleman/multiplier.hpp"
#include "carleman/spectra.hpp"

using namespace carleman;

namespace {

const std::vector<double> lambdas{0.0, 1.0, 2.0, 5.0, 12.0};
const std::vector<double> taus{8.0, 9.0, 20.0};
const std::vector<double> etas{-3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0};

} // namespace

TEST(Multiplier, MatchesQuadratureOracleOnGrid) {
  for (double lambda : lambdas)
    for (double tau : taus)
      for (double eta : etas)
        EXPECT_NEAR(multiplier_closed(lambda, tau, eta), multiplier_quadrature(lambda, tau, eta, 1e3, 0.05), 1e-6)
            << lambda << " " << tau << " " << eta;
}

TEST(Multiplier, SolvesTheModeEquationAwayFromOrigin) {
  // m'' - 2 tau m' + (tau^2 - lambda^2) m = 0 for eta != 0, by central differences
  const double d = 1e-4;
  for (double lambda : {0.0, 1.0, 3.7, 9.5, 12.0})
    for (double tau : {8.0, 9.0}) {
      const MultiplierKernel m(lambda, tau);
      for (double eta : {-2.0, -0.5, -0.05, 0.05, 0.5, 2.0}) {
        const double m0 = m(eta), mp = m(eta + d), mm = m(eta - d);
        const double second = (mp - 2 * m0 + mm) / (d * d);
        const double first = (mp - mm) / (2 * d);
        const double residual = second - 2 * tau * first + (tau * tau - lambda * lambda) * m0;
        const double scale = std::abs(second) + std::abs(2 * tau * first) + std::abs((tau * tau + lambda * lambda) * m0);
        EXPECT_LE(std::abs(residual), 1e-5 * scale + 1e-9) << lambda << " " << tau << " " << eta;
      }
    }
}

TEST(Multiplier, UnitDerivativeJumpAndContinuity) {
  const double d = 1e-7;
  for (double lambda : {0.0, 1.0, 5.0, 8.5, 30.0}) {
    const MultiplierKernel m(lambda, 8.0);
    EXPECT_NEAR(m.derivative_jump(), 1.0, 1e-14);
    EXPECT_NEAR(m(d), m(-d), 1e-6);
    const double jump = (m(2 * d) - m(d)) / d - (m(-d) - m(-2 * d)) / d;
    EXPECT_NEAR(jump, 1.0, 1e-5);
  }
}

TEST(Multiplier, IntegralIsSymbolAtZero) {
  for (double lambda : {0.0, 1.0, 5.0, 12.0})
    for (double tau : taus) {
      const MultiplierKernel m(lambda, tau);
      auto f = [&](double x) { return m(x); };
      using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
      const double numeric = GK::integrate(f, -60.0, 0.0, 15, 1e-14) + GK::integrate(f, 0.0, 60.0, 15, 1e-14);
      EXPECT_NEAR(m.integral(), 1.0 / (tau * tau - lambda * lambda), 1e-15);
      EXPECT_NEAR(numeric, m.integral(), 1e-10);
    }
}

TEST(Multiplier, SupportSides) {
  // below tau the kernel lives on eta < 0; above tau it is two-sided
  const MultiplierKernel below(5.0, 9.0), above(12.0, 9.0);
  EXPECT_EQ(below(0.5), 0.0);
  EXPECT_NE(below(-0.5), 0.0);
  EXPECT_LT(above(0.5), 0.0);
  EXPECT_LT(above(-0.5), 0.0);
}

TEST(Multiplier, Errors) {
  EXPECT_THROW(MultiplierKernel(8.0, 8.0), singular_parameter_error);
  EXPECT_THROW(MultiplierKernel(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(MultiplierKernel(-1.0, 8.0), std::invalid_argument);
  EXPECT_THROW(multiplier_quadrature(8.0, 8.0, 0.0, 10.0, 0.1), singular_parameter_error);
  EXPECT_THROW(multiplier_quadrature(1.0, 8.0, 0.0, -1.0, 0.1), std::invalid_argument);
}

TEST(Multiplier, DecayBoundAtEverySampledPoint) {
  for (double lambda : lambdas) {
    if (lambda < 1.0) continue;
    for (double tau : taus)
      for (double eta : etas)
        EXPECT_LE(std::abs(multiplier_closed(lambda, tau, eta)), multiplier_decay_bound(lambda, tau, eta));
  }
  for (double lambda = 1.0; lambda < 40.0; lambda += 0.173)
    for (double eta = -5.0; eta <= 5.0; eta += 0.0625)
      EXPECT_LE(std::abs(multiplier_closed(lambda, 9.3, eta)), multiplier_decay_bound(lambda, 9.3, eta) * (1 + 1e-15));
}

TEST(Envelope, RegimesPartitionClusters) {
  EXPECT_EQ(envelope_regime(0, 9.2), EnvelopeRegime::constant_cluster);
  EXPECT_EQ(envelope_regime(1, 9.2), EnvelopeRegime::first_cluster);
  EXPECT_EQ(envelope_regime(2, 9.2), EnvelopeRegime::below_tau);
  EXPECT_EQ(envelope_regime(7, 9.2), EnvelopeRegime::below_tau);
  EXPECT_EQ(envelope_regime(8, 9.2), EnvelopeRegime::near_tau);
  EXPECT_EQ(envelope_regime(10, 9.2), EnvelopeRegime::near_tau);
  EXPECT_EQ(envelope_regime(11, 9.2), EnvelopeRegime::above_tau);
  EXPECT_THROW(envelope_regime(-1, 9.2), std::invalid_argument);
}

TEST(Envelope, DominatesEveryModeOfItsCluster) {
  // S^2 spectrum, admissible tau, every cluster k and every eigenvalue in it
  const auto s = sphere_spectrum(3, 80);
  for (double tau : {8.0, 9.0, 12.0, 20.0, 40.0}) {
    const double sigma = std::min(0.25, distance_to_spectrum(tau, s));
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double lambda = s.value(j);
      const int k = static_cast<int>(std::floor(lambda));
      for (double eta = -6.0; eta <= 6.0; eta += 0.01) {
        const double env = multiplier_envelope(k, lambda, tau, sigma, eta);
        EXPECT_LE(std::abs(multiplier_closed(lambda, tau, eta)), env * (1 + 1e-14)) << tau << " " << lambda << " " << eta;
      }
    }
  }
}

TEST(Envelope, ValidatesClusterAndSigma) {
  EXPECT_THROW(multiplier_envelope(2, 3.5, 9.0, 0.25, 1.0), std::invalid_argument);
  EXPECT_THROW(multiplier_envelope(8, 8.9, 9.0, 0.25, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(multiplier_envelope(8, 8.5, 9.0, 0.25, 1.0));
}
