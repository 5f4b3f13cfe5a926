#include "affreq/geometry.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace affreq;
using affreq::testing::exact_trajectory;
using TF = affreq::TimeFunction;

namespace {

constexpr double pi = std::numbers::pi;

// v(t) = (a cos(w t), b sin(w t)) sampled with exact derivatives.
PlanarTrajectory ellipse(double a, double b, double w, std::size_t n = 2000, double dt = 1e-3) {
  const TF t = TF::time();
  return analytic_trajectory(a * TF::cos(w * t), b * TF::sin(w * t), 0.0, dt, n, 2);
}

std::pair<double, double> valid_range(const FrequencyTrace& tr) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.valid[k]) {
      lo = std::min(lo, tr.omega[k]);
      hi = std::max(hi, tr.omega[k]);
    }
  return {lo, hi};
}

double max_error(const FrequencyTrace& tr, const std::vector<double>& truth, std::size_t skip = 0) {
  double e = 0.0;
  for (std::size_t k = skip; k < tr.size(); ++k)
    if (tr.valid[k]) e = std::max(e, std::abs(tr.omega[k] - truth[k]));
  return e;
}

TEST(AffineInvariants, EllipseHandComputed) {
  const auto inv = affine_invariants(ellipse(2.0, 1.0, 1.0));
  for (std::size_t k = 0; k < inv.valid.size(); ++k) {
    ASSERT_TRUE(inv.valid[k]);
    EXPECT_NEAR(inv.sigma_dot[k], std::cbrt(2.0), 1e-12);
    EXPECT_NEAR(inv.sigma_dot[k], 1.259921, 5e-7);
    EXPECT_NEAR(inv.kappa_a[k], std::pow(2.0, -2.0 / 3.0), 1e-12);
    EXPECT_NEAR(inv.kappa_a[k], 0.629961, 5e-7);
  }
  const auto w = omega_affine(ellipse(2.0, 1.0, 1.0), 1.0);
  for (double x : w.omega) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(AffineInvariants, UnitCircleAtAngularFrequencyThree) {
  const auto inv = affine_invariants(ellipse(1.0, 1.0, 3.0));
  for (std::size_t k = 0; k < inv.valid.size(); ++k) {
    EXPECT_NEAR(inv.sigma_dot[k], std::cbrt(3.0), 1e-12);
    EXPECT_NEAR(inv.kappa_a[k], 27.0 / std::pow(3.0, 5.0 / 3.0), 1e-10);
  }
  const auto w = omega_affine(ellipse(1.0, 1.0, 3.0), 3.0);
  for (double x : w.omega) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(OmegaAffine, CollinearInputIsAllInvalid) {
  const TF t = TF::time();
  const TF s = TF::sin(2 * pi * t);
  const auto tr = analytic_trajectory(s, 2.0 * s, 0.0, 1e-3, 500, 2);
  const auto w = omega_affine(tr, 2 * pi);
  EXPECT_EQ(w.fraction_valid(), 0.0);
  EXPECT_FALSE(w.warnings.empty());
  for (double x : w.omega) EXPECT_EQ(x, 0.0);
  const auto f = omega_frenet(tr, 2 * pi);
  for (double x : f.omega) EXPECT_TRUE(std::isfinite(x));
}

TEST(OmegaAffine, RequiresSecondDerivative) {
  const TF t = TF::time();
  const auto tr = analytic_trajectory(TF::cos(t), TF::sin(t), 0.0, 1e-2, 10, 1);
  EXPECT_THROW(omega_affine(tr, 1.0), ValidationError);
  EXPECT_NO_THROW(omega_frenet(tr, 1.0));
}

TEST(OmegaAffine, StationaryUnbalancedScenariosAreExactlyNominal) {
  for (const char* label : {"E1", "E3", "E5"}) {
    const auto spec = find_scenario(label);
    const auto w = omega_affine(exact_trajectory(spec), spec.omega_nominal);
    EXPECT_EQ(w.fraction_valid(), 1.0) << label;
    for (double x : w.omega) ASSERT_NEAR(x, 1.0, 1e-10) << label;
  }
}

TEST(OmegaAffine, E6NumericTrajectoryTracksTruth) {
  const auto spec = find_scenario("E6");
  const auto gen = generate(spec);
  const auto pu = to_pu(gen.buffer, spec.omega_nominal);
  const auto tr = differentiate(clarke(pu.buffer), {1, 2});
  const auto w = omega_affine(tr, spec.omega_nominal);
  EXPECT_LT(max_error(w, gen.truth.if_pu), 5e-3);
}

TEST(OmegaFrenet, BalancedIsExactlyNominal) {
  const auto spec = find_scenario("E1");
  const auto w = omega_frenet(exact_trajectory(spec), spec.omega_nominal);
  for (double x : w.omega) ASSERT_NEAR(x, 1.0, 1e-12);
}

TEST(OmegaFrenet, EllipseExtremesAreAxisRatios) {
  // semi-axes 12 and 8: omega_kappa / omega in [8/12, 12/8]
  const auto w = omega_frenet(ellipse(12.0, 8.0, 1.0, 7000), 1.0);
  const auto [lo, hi] = valid_range(w);
  EXPECT_NEAR(lo, 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(hi, 1.5, 1e-6);
  EXPECT_NEAR(hi - lo, 0.8333, 1e-4);
}

TEST(OmegaFrenet, E3OscillatesBetweenSequenceRatios) {
  // Positive and negative sequence magnitudes P and N give semi-axes P + N and P - N.
  const double p = (12000.0 + 8000.0 + 12000.0) / 3.0;
  const double n = (12000.0 - 8000.0) / 3.0;
  auto spec = find_scenario("E3");
  spec.sample_rate = 1e6; // fine grid so the sampled extremes are the true ones
  spec.duration = 0.02;
  const auto w = omega_frenet(exact_trajectory(spec), spec.omega_nominal);
  const auto [lo, hi] = valid_range(w);
  EXPECT_NEAR(lo, (p - n) / (p + n), 1e-6);
  EXPECT_NEAR(hi, (p + n) / (p - n), 1e-6);
  EXPECT_NEAR(hi - lo, 0.507937, 1e-5);
}

TEST(OmegaFrenet, EqualsAffineOnCircles) {
  for (double r : {0.5, 1.0, 40.0}) {
    const auto tr = ellipse(r, r, 2.5);
    const auto a = omega_affine(tr, 2.5);
    const auto f = omega_frenet(tr, 2.5);
    for (std::size_t k = 0; k < tr.size(); ++k) ASSERT_NEAR(a.omega[k], f.omega[k], 1e-12);
  }
}

TEST(GeometryProperty, AffineFrequencyIsInvariantUnderLinearMaps) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const TF t = TF::time();
  const TF x = 1.3 * TF::cos(4.0 * t), y = 0.7 * TF::sin(4.0 * t);
  const auto base = omega_affine(analytic_trajectory(x, y, 0.0, 1e-3, 800, 2), 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    double m[4];
    do {
      for (double& e : m) e = u(rng);
    } while (std::abs(m[0] * m[3] - m[1] * m[2]) < 0.1);
    const auto tr = analytic_trajectory(m[0] * x + m[1] * y, m[2] * x + m[3] * y, 0.0, 1e-3, 800, 2);
    const auto w = omega_affine(tr, 4.0);
    for (std::size_t k = 0; k < w.size(); ++k) ASSERT_NEAR(w.omega[k], base.omega[k], 1e-10);
  }
}

TEST(GeometryProperty, InvariantsScaleAsExpected) {
  // isotropic scale s: sigma_dot scales by s^(2/3), kappa_a by s^(-4/3)
  const auto a = affine_invariants(ellipse(1.3, 0.6, 2.0));
  const double s = 7.0;
  const auto b = affine_invariants(ellipse(s * 1.3, s * 0.6, 2.0));
  for (std::size_t k = 0; k < a.valid.size(); ++k) {
    EXPECT_NEAR(b.sigma_dot[k] / a.sigma_dot[k], std::pow(s, 2.0 / 3.0), 1e-12);
    EXPECT_NEAR(b.kappa_a[k] / a.kappa_a[k], std::pow(s, -4.0 / 3.0), 1e-12);
  }
}

TEST(GeometryProperty, StationaryEllipsesHaveConstantPositiveCurvature) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> axis(0.2, 5.0), freq(0.5, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = axis(rng), b = axis(rng), w = freq(rng);
    const auto inv = affine_invariants(ellipse(a, b, w, 300));
    const auto om = omega_affine(ellipse(a, b, w, 300), w);
    for (std::size_t k = 0; k < inv.valid.size(); ++k) {
      ASSERT_GT(inv.kappa_a[k], 0.0);
      ASSERT_NEAR(inv.kappa_a[k], inv.kappa_a[0], 1e-8 * inv.kappa_a[0]);
      // sqrt(kappa_a) * sigma_dot reproduces omega_a
      ASSERT_NEAR(std::sqrt(inv.kappa_a[k]) * inv.sigma_dot[k] / w, om.omega[k], 1e-12);
    }
  }
}

TEST(Geometry, ClockwiseCurvesAreHandledByOrientation) {
  const TF t = TF::time();
  const auto tr = analytic_trajectory(3.0 * TF::cos(2.0 * t), -1.0 * TF::sin(2.0 * t), 0.0, 1e-3, 500, 2);
  const auto w = omega_affine(tr, 2.0);
  EXPECT_EQ(w.fraction_valid(), 1.0);
  for (double x : w.omega) EXPECT_NEAR(x, 1.0, 1e-12);
  const auto f = omega_frenet(tr, 2.0);
  EXPECT_EQ(f.fraction_valid(), 1.0);
  const auto inv = affine_invariants(tr);
  EXPECT_NEAR(inv.sigma_dot[0], std::cbrt(6.0), 1e-12);
}

TEST(Geometry, RepairBridgesShortGaps) {
  FrequencyTrace tr;
  tr.dt = 1e-3;
  tr.omega = {1.0, 0.0, 0.0, 1.3, 1.3};
  tr.valid = {1, 0, 0, 1, 1};
  tr.repaired.assign(5, 0);
  repair_invalid(tr, 2 * pi * 50.0);
  EXPECT_NEAR(tr.omega[1], 1.1, 1e-12);
  EXPECT_NEAR(tr.omega[2], 1.2, 1e-12);
  EXPECT_EQ(tr.repaired[1], 1);
  EXPECT_EQ(tr.valid[1], 0);
  EXPECT_NEAR(tr.fraction_valid(), 0.6, 1e-15);
}

TEST(Geometry, RepairLeavesLongGapsAndEdges) {
  FrequencyTrace tr;
  tr.dt = 1e-3;
  const std::size_t n = 60; // 50 Hz cycle = 20 samples
  tr.omega.assign(n, 1.0);
  tr.valid.assign(n, 1);
  tr.repaired.assign(n, 0);
  for (std::size_t k = 0; k < 3; ++k) tr.valid[k] = 0, tr.omega[k] = 0.0;
  for (std::size_t k = 10; k < 40; ++k) tr.valid[k] = 0, tr.omega[k] = 0.0;
  repair_invalid(tr, 2 * pi * 50.0);
  EXPECT_EQ(tr.omega[0], 0.0);
  EXPECT_EQ(tr.omega[20], 0.0);
  EXPECT_EQ(std::count(tr.repaired.begin(), tr.repaired.end(), 1), 0);
}

TEST(SlowVariation, E6PhaseRatio) {
  const auto rep = check_slow_variation(find_scenario("E6"), 2);
  ASSERT_EQ(rep.slow_variation.size(), 2u);
  // 0.4 pi^2 / (100 pi)
  EXPECT_NEAR(rep.slow_variation[0].phase_ratio, 0.012566, 1e-6);
  EXPECT_NEAR(rep.slow_variation[0].magnitude_ratio, 0.0, 1e-15);
  EXPECT_TRUE(rep.slow_variation_satisfied);
}

TEST(SlowVariation, StationaryScenarioHasZeroRatios) {
  const auto rep = check_slow_variation(find_scenario("E1"), 2);
  EXPECT_EQ(rep.max_ratio(), 0.0);
  EXPECT_TRUE(rep.slow_variation_satisfied);
}

TEST(SlowVariation, FastPhaseModulationViolates) {
  auto spec = find_scenario("E1");
  for (auto& p : spec.phases) p.phase_mod = spec.omega_nominal * TF::time();
  const auto rep = check_slow_variation(spec, 2);
  EXPECT_NEAR(rep.slow_variation[0].phase_ratio, 1.0, 1e-12);
  EXPECT_FALSE(rep.slow_variation_satisfied);
}

TEST(SlowVariation, RejectsOpaqueFunctionsAndBadOrder) {
  auto spec = find_scenario("E1");
  spec.phases[0].phase_mod = TF::opaque([](double) { return 0.0; });
  EXPECT_THROW(check_slow_variation(spec, 2), UnsupportedSpecError);
  EXPECT_THROW(check_slow_variation(find_scenario("E1"), 4), ValidationError);
}

TEST(SlowVariation, BracketAssessmentCountsNoViolationsOnE3) {
  const auto spec = find_scenario("E3");
  const auto tr = exact_trajectory(spec);
  auto rep = check_slow_variation(spec, 2);
  assess_brackets(rep, tr, omega_affine(tr, spec.omega_nominal));
  EXPECT_EQ(rep.bracket_sign_violations, 0u);
  EXPECT_EQ(rep.fraction_valid, 1.0);
}

TEST(Estimator, NamesRoundTrip) {
  for (auto e : {Estimator::affine, Estimator::frenet, Estimator::srf_pll, Estimator::delay_pll})
    EXPECT_EQ(estimator_from_string(to_string(e)), e);
  EXPECT_THROW(estimator_from_string("kalman"), ValidationError);
}

} // namespace
