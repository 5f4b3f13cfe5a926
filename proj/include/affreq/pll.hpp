#pragma once

// Reference estimators: a synchronous-reference-frame PLL on (alpha, beta)
// and a single-phase PLL whose quadrature signal is the input delayed by tau.

#include "affreq/error.hpp"
#include "affreq/geometry.hpp"
#include "affreq/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace affreq {

struct PllConfig {
  double kp = 92.0;     // rad/s per pu
  double ki = 4230.0;   // rad/s^2 per pu
  double omega_init = nominal_omega_50hz;
  double tau = 0.5 * std::numbers::pi / nominal_omega_50hz; // quarter nominal period

  static PllConfig defaults(double omega_nominal) {
    PllConfig c;
    c.omega_init = omega_nominal;
    c.tau = 0.5 * std::numbers::pi / omega_nominal;
    return c;
  }

  void validate() const {
    if (!(kp > 0.0) || !(ki > 0.0)) throw ValidationError("pll: gains kp and ki must be positive");
    if (!(tau >= 0.0)) throw ValidationError("pll: tau must be non-negative");
    if (!std::isfinite(omega_init)) throw ValidationError("pll: omega_init must be finite");
  }
};

struct PllState {
  double theta_hat = 0.0;  // [0, 2pi)
  double omega_hat = 0.0;  // rad/s
  double integrator = 0.0; // rad/s
};

// One loop: Park rotation by -theta_hat, PI on v_q with the nominal
// frequency as feed-forward, forward-Euler phase integration.
class SrfPll {
public:
  SrfPll(const PllConfig& cfg, double omega_nominal, double dt)
      : cfg_(cfg), omega_nominal_(omega_nominal), dt_(dt) {
    cfg_.validate();
    state_.omega_hat = cfg_.omega_init;
    state_.integrator = cfg_.omega_init - omega_nominal_;
  }

  double step(double v_alpha, double v_beta) {
    const double vq = -v_alpha * std::sin(state_.theta_hat) + v_beta * std::cos(state_.theta_hat);
    state_.integrator += cfg_.ki * vq * dt_;
    state_.omega_hat = omega_nominal_ + cfg_.kp * vq + state_.integrator;
    state_.theta_hat = std::fmod(state_.theta_hat + state_.omega_hat * dt_, 2.0 * std::numbers::pi);
    if (state_.theta_hat < 0.0) state_.theta_hat += 2.0 * std::numbers::pi;
    return state_.omega_hat;
  }

  const PllState& state() const { return state_; }

private:
  PllConfig cfg_;
  double omega_nominal_;
  double dt_;
  PllState state_;
};

inline FrequencyTrace srf_pll_run(const SignalBuffer& alpha_beta, const PllConfig& cfg, double omega_nominal) {
  alpha_beta.validate();
  if (alpha_beta.channels.size() != 2)
    throw ValidationError("srf_pll_run: expected 2 channels (alpha, beta), got " +
                          std::to_string(alpha_beta.channels.size()));
  const auto& va = alpha_beta.channels[0].samples;
  const auto& vb = alpha_beta.channels[1].samples;
  SrfPll pll(cfg, omega_nominal, alpha_beta.dt);
  FrequencyTrace out;
  out.estimator = Estimator::srf_pll;
  out.t0 = alpha_beta.t0;
  out.dt = alpha_beta.dt;
  out.omega.resize(va.size());
  out.valid.assign(va.size(), 1);
  out.repaired.assign(va.size(), 0);
  for (std::size_t k = 0; k < va.size(); ++k) out.omega[k] = pll.step(va[k], vb[k]) / omega_nominal;
  return out;
}

// Quadrature from a nearest-sample transport delay. The first tau seconds
// have no delayed sample and are flagged invalid; tau = 0 yields a
// degenerate quadrature and an all-invalid trace with a warning.
inline FrequencyTrace delay_pll_run(const SignalBuffer& v, const PllConfig& cfg, double omega_nominal) {
  v.validate();
  cfg.validate();
  if (v.channels.size() != 1)
    throw ValidationError("delay_pll_run: expected 1 channel, got " + std::to_string(v.channels.size()));
  if (cfg.tau >= v.duration())
    throw ValidationError("delay_pll_run: tau = " + std::to_string(cfg.tau) + " s exceeds the buffer duration " +
                          std::to_string(v.duration()) + " s");
  const auto& x = v.channels[0].samples;
  const std::size_t n = x.size();
  const auto delay = static_cast<std::size_t>(std::llround(cfg.tau / v.dt));

  FrequencyTrace out;
  out.estimator = Estimator::delay_pll;
  out.t0 = v.t0;
  out.dt = v.dt;
  out.omega.assign(n, cfg.omega_init / omega_nominal);
  out.valid.assign(n, 0);
  out.repaired.assign(n, 0);
  if (delay == 0) {
    out.warnings.emplace_back("delay_pll: tau rounds to zero samples; quadrature is degenerate");
    return out;
  }
  SrfPll pll(cfg, omega_nominal, v.dt);
  for (std::size_t k = delay; k < n; ++k) {
    out.omega[k] = pll.step(x[k], x[k - delay]) / omega_nominal;
    out.valid[k] = 1;
  }
  return out;
}

} // namespace affreq
