#include "affreq/pipeline.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace affreq;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double wo = 100 * pi;

FrequencyTrace srf_on(const char* label) {
  const auto gen = generate(find_scenario(label));
  return srf_pll_run(clarke(to_pu(gen.buffer, wo).buffer), PllConfig::defaults(wo), wo);
}

double dft_magnitude(const std::vector<double>& x, std::size_t from, double f, double dt) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = from; k < x.size(); ++k)
    acc += x[k] * std::polar(1.0, -2 * pi * f * static_cast<double>(k) * dt);
  return std::abs(acc) / static_cast<double>(x.size() - from);
}

TEST(SrfPll, LocksOnBalancedInput) {
  const auto tr = srf_on("E1");
  for (std::size_t k = 2000; k < tr.size(); ++k) ASSERT_NEAR(tr.omega[k], 1.0, 1e-4);
  EXPECT_EQ(tr.fraction_valid(), 1.0);
}

TEST(SrfPll, UnbalanceGivesDoubleFrequencyRipple) {
  const auto tr = srf_on("E3");
  double lo = 1e9, hi = -1e9;
  for (std::size_t k = 2000; k < tr.size(); ++k) {
    lo = std::min(lo, tr.omega[k]);
    hi = std::max(hi, tr.omega[k]);
  }
  EXPECT_GT(hi - lo, 1e-2);
  const double m100 = dft_magnitude(tr.omega, 2000, 100.0, tr.dt);
  for (double f : {25.0, 50.0, 150.0, 200.0, 300.0}) EXPECT_GT(m100, 5.0 * dft_magnitude(tr.omega, 2000, f, tr.dt)) << f;
}

TEST(SrfPll, ZeroInputHoldsInitialFrequency) {
  SignalBuffer ab;
  ab.dt = 1e-4;
  ab.channels = {Channel{"alpha", std::vector<double>(1000, 0.0)}, Channel{"beta", std::vector<double>(1000, 0.0)}};
  auto cfg = PllConfig::defaults(wo);
  cfg.omega_init = 1.02 * wo;
  const auto tr = srf_pll_run(ab, cfg, wo);
  for (double w : tr.omega) ASSERT_NEAR(w, 1.02, 1e-12);
}

TEST(SrfPll, RejectsBadConfig) {
  auto cfg = PllConfig::defaults(wo);
  cfg.kp = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = PllConfig::defaults(wo);
  cfg.tau = -1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

SignalBuffer single(double seconds, auto f) {
  SignalBuffer b;
  b.dt = 1e-4;
  const auto n = static_cast<std::size_t>(std::llround(seconds / b.dt));
  b.channels = {Channel{"v", std::vector<double>(n)}};
  for (std::size_t k = 0; k < n; ++k) b.channels[0].samples[k] = f(b.time(k));
  return b;
}

TEST(DelayPll, LocksOnStationarySinusoid) {
  const auto v = single(1.0, [](double t) { return std::sin(wo * t + 0.3); });
  const auto tr = delay_pll_run(v, PllConfig::defaults(wo), wo);
  // quarter period of 50 Hz at 10 kHz
  for (std::size_t k = 0; k < 50; ++k) EXPECT_EQ(tr.valid[k], 0);
  for (std::size_t k = 3000; k < tr.size(); ++k) ASSERT_NEAR(tr.omega[k], 1.0, 1e-4);
}

TEST(DelayPll, ZeroDelayIsFlaggedNotThrown) {
  const auto v = single(0.1, [](double t) { return std::sin(wo * t); });
  auto cfg = PllConfig::defaults(wo);
  cfg.tau = 0.0;
  const auto tr = delay_pll_run(v, cfg, wo);
  EXPECT_EQ(tr.fraction_valid(), 0.0);
  EXPECT_FALSE(tr.warnings.empty());
  for (double w : tr.omega) EXPECT_TRUE(std::isfinite(w));
}

TEST(DelayPll, DelayLongerThanBufferThrows) {
  const auto v = single(0.1, [](double t) { return std::sin(wo * t); });
  auto cfg = PllConfig::defaults(wo);
  cfg.tau = 0.2;
  EXPECT_THROW(delay_pll_run(v, cfg, wo), ValidationError);
}

TEST(DelayPll, IsCausal) {
  auto v = single(0.5, [](double t) { return std::sin(wo * t); });
  const auto a = delay_pll_run(v, PllConfig::defaults(wo), wo);
  for (std::size_t k = 3000; k < v.size(); ++k) v.channels[0].samples[k] *= -3.0;
  const auto b = delay_pll_run(v, PllConfig::defaults(wo), wo);
  for (std::size_t k = 0; k < 3000; ++k) ASSERT_EQ(a.omega[k], b.omega[k]);
  EXPECT_NE(a.omega[3001], b.omega[3001]);
}

TEST(DelayPll, RipplesMoreThanAffineUnderPhaseModulation) {
  const auto gen = generate(find_scenario("SP"));
  EstimatorConfig cfg;
  cfg.estimators = {Estimator::affine, Estimator::delay_pll};
  const auto res = estimate(gen.buffer, cfg);
  const auto rep = compute_metrics(res.traces, &gen.truth, 0.2);
  EXPECT_GE(rep.at(Estimator::delay_pll).ripple_pp_pu, 3.0 * rep.at(Estimator::affine).ripple_pp_pu);
  EXPECT_LT(*rep.at(Estimator::affine).rmse_pu, 5e-3);
}

} // namespace
