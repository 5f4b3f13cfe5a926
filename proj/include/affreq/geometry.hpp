#pragma once

// Affine differential invariants of the voltage curve and the geometric
// frequency estimators built on them.
//
// With v the voltage vector (the velocity of the flux curve), the affine
// arc-length rate and affine curvature are
//
//     sigma_dot = [v, v']^(1/3),   kappa_a = [v', v''] / sigma_dot^5
//
// and the affine frequency estimate is
//
//     omega_a = sqrt(kappa_a) * sigma_dot = sqrt([v', v''] / [v, v'])
//
// The Frenet estimate omega_k = [v, v'] / |v|^2 is exact only on circles.
//
// Orientation: brackets of a clockwise curve are negative. The dominant
// orientation s = sign(median [v, v']) is factored out, so both traversal
// directions yield positive invariants. Samples whose oriented bracket falls
// below `guard * |median|` are flagged invalid.

#include "affreq/error.hpp"
#include "affreq/time_function.hpp"
#include "affreq/transforms.hpp"
#include "affreq/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace affreq {

inline constexpr double default_guard = 1e-6;
inline constexpr double slow_variation_limit = 0.1;

enum class Estimator { affine, frenet, srf_pll, delay_pll };

inline std::string_view to_string(Estimator e) {
  switch (e) {
  case Estimator::affine: return "affine";
  case Estimator::frenet: return "frenet";
  case Estimator::srf_pll: return "srf_pll";
  case Estimator::delay_pll: return "delay_pll";
  }
  return "unknown";
}

inline Estimator estimator_from_string(std::string_view s) {
  if (s == "affine") return Estimator::affine;
  if (s == "frenet") return Estimator::frenet;
  if (s == "srf_pll") return Estimator::srf_pll;
  if (s == "delay_pll") return Estimator::delay_pll;
  throw ValidationError("unknown estimator '" + std::string(s) + "' (expected affine, frenet, srf_pll or delay_pll)");
}

// Per-sample frequency in pu of the nominal angular frequency. Invalid
// samples hold 0 unless repaired by interpolation; `repaired` samples carry
// an interpolated value but stay invalid for metrics.
struct FrequencyTrace {
  Estimator estimator = Estimator::affine;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> omega;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> repaired;
  std::vector<std::string> warnings;

  std::size_t size() const { return omega.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }

  double fraction_valid() const {
    if (valid.empty()) return 0.0;
    const auto n = std::count(valid.begin(), valid.end(), std::uint8_t{1});
    return static_cast<double>(n) / static_cast<double>(valid.size());
  }
};

struct AffineInvariants {
  std::vector<double> sigma_dot;
  std::vector<double> kappa_a;
  std::vector<std::uint8_t> valid;
};

namespace detail {

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

// Relative guard over the interior samples of a per-sample quantity.
struct Guard {
  double orientation = 0.0; // +1, -1 or 0 (degenerate)
  double threshold = 0.0;

  bool passes(double value) const {
    return orientation != 0.0 && std::isfinite(value) && orientation * value > threshold;
  }
};

inline Guard make_guard(const std::vector<double>& values, const PlanarTrajectory& tr, double guard) {
  std::vector<double> pool;
  pool.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    if (tr.interior(k) && std::isfinite(values[k])) pool.push_back(values[k]);
  const double med = median_of(std::move(pool));
  Guard g;
  g.orientation = med > 0.0 ? 1.0 : (med < 0.0 ? -1.0 : 0.0);
  g.threshold = guard * std::abs(med);
  return g;
}

struct Brackets {
  std::vector<double> position_velocity;     // [v, v']
  std::vector<double> velocity_acceleration; // [v', v'']
};

inline Brackets brackets(const PlanarTrajectory& tr, bool need_second) {
  Brackets b;
  const std::size_t n = tr.size();
  b.position_velocity.assign(n, 0.0);
  if (need_second) b.velocity_acceleration.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!tr.interior(k)) continue;
    b.position_velocity[k] = bracket(tr.position(k), tr.velocity(k));
    if (need_second) b.velocity_acceleration[k] = bracket(tr.velocity(k), tr.acceleration(k));
  }
  return b;
}

inline void require_orders(const PlanarTrajectory& tr, int max_order, std::string_view who) {
  for (int d = 1; d <= max_order; ++d)
    if (!tr.has_order(d))
      throw ValidationError(std::string(who) + ": trajectory lacks derivative order " + std::to_string(d));
}

inline FrequencyTrace empty_trace(Estimator e, const PlanarTrajectory& tr) {
  FrequencyTrace out;
  out.estimator = e;
  out.t0 = tr.t0;
  out.dt = tr.dt;
  out.omega.assign(tr.size(), 0.0);
  out.valid.assign(tr.size(), 0);
  out.repaired.assign(tr.size(), 0);
  return out;
}

} // namespace detail

inline AffineInvariants affine_invariants(const PlanarTrajectory& tr, double guard = default_guard) {
  detail::require_orders(tr, 2, "affine_invariants");
  const auto b = detail::brackets(tr, true);
  const auto g = detail::make_guard(b.position_velocity, tr, guard);
  AffineInvariants out;
  const std::size_t n = tr.size();
  out.sigma_dot.assign(n, 0.0);
  out.kappa_a.assign(n, 0.0);
  out.valid.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!tr.interior(k) || !g.passes(b.position_velocity[k])) continue;
    const double s = std::cbrt(g.orientation * b.position_velocity[k]);
    const double kappa = g.orientation * b.velocity_acceleration[k] / std::pow(s, 5);
    if (!std::isfinite(s) || !std::isfinite(kappa)) continue;
    out.sigma_dot[k] = s;
    out.kappa_a[k] = kappa;
    out.valid[k] = 1;
  }
  return out;
}

inline FrequencyTrace omega_affine(const PlanarTrajectory& tr, double omega_nominal, double guard = default_guard) {
  detail::require_orders(tr, 2, "omega_affine");
  const auto b = detail::brackets(tr, true);
  const auto g1 = detail::make_guard(b.position_velocity, tr, guard);
  const auto g2 = detail::make_guard(b.velocity_acceleration, tr, guard);
  auto out = detail::empty_trace(Estimator::affine, tr);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (!tr.interior(k)) continue;
    if (!g1.passes(b.position_velocity[k]) || !g2.passes(b.velocity_acceleration[k])) continue;
    const double ratio = b.velocity_acceleration[k] / b.position_velocity[k];
    if (!(ratio > 0.0) || !std::isfinite(ratio)) continue;
    const double w = std::sqrt(ratio) / omega_nominal;
    if (!std::isfinite(w)) continue;
    out.omega[k] = w;
    out.valid[k] = 1;
  }
  if (out.fraction_valid() == 0.0) out.warnings.emplace_back("affine: no valid samples (degenerate brackets)");
  return out;
}

inline FrequencyTrace omega_frenet(const PlanarTrajectory& tr, double omega_nominal, double guard = default_guard) {
  detail::require_orders(tr, 1, "omega_frenet");
  const auto b = detail::brackets(tr, false);
  const auto orient = detail::make_guard(b.position_velocity, tr, 0.0);
  std::vector<double> radius2(tr.size(), 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) radius2[k] = tr.v1[k] * tr.v1[k] + tr.v2[k] * tr.v2[k];
  const auto gr = detail::make_guard(radius2, tr, guard);
  auto out = detail::empty_trace(Estimator::frenet, tr);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (!tr.interior(k) || !gr.passes(radius2[k])) continue;
    const double w = orient.orientation * b.position_velocity[k] / radius2[k] / omega_nominal;
    if (!(w > 0.0) || !std::isfinite(w)) continue;
    out.omega[k] = w;
    out.valid[k] = 1;
  }
  if (out.fraction_valid() == 0.0) out.warnings.emplace_back("frenet: no valid samples (degenerate input)");
  return out;
}

// Linear interpolation across invalid runs that are bounded by valid samples
// on both sides and shorter than one nominal cycle. Interpolated samples are
// marked `repaired` and remain invalid.
inline void repair_invalid(FrequencyTrace& trace, double omega_nominal) {
  const auto max_run = static_cast<std::size_t>(2.0 * std::numbers::pi / (omega_nominal * trace.dt));
  const std::size_t n = trace.size();
  std::size_t k = 0;
  while (k < n && !trace.valid[k]) ++k;
  while (k < n) {
    std::size_t j = k + 1;
    while (j < n && !trace.valid[j]) ++j;
    if (j == n) break;
    const std::size_t gap = j - k - 1;
    if (gap > 0 && gap < max_run) {
      for (std::size_t i = k + 1; i < j; ++i) {
        const double f = static_cast<double>(i - k) / static_cast<double>(j - k);
        trace.omega[i] = trace.omega[k] + f * (trace.omega[j] - trace.omega[k]);
        trace.repaired[i] = 1;
      }
    }
    k = j;
  }
}

// ---------------------------------------------------------------------------
// Validity reporting

struct SlowVariationMargin {
  int order = 1;
  double phase_ratio = 0.0;     // max_t |d^h phi / dt^h| / omega_o^h
  double magnitude_ratio = 0.0; // max_t |d^h (V / <V>) / dt^h| / omega_o^h
};

struct ValidityReport {
  double fraction_valid = 1.0;
  std::size_t bracket_sign_violations = 0;
  std::vector<SlowVariationMargin> slow_variation;
  bool slow_variation_satisfied = true;

  double max_ratio() const {
    double m = 0.0;
    for (const auto& s : slow_variation) m = std::max({m, s.phase_ratio, s.magnitude_ratio});
    return m;
  }
};

// Evaluates the slow-variation conditions on the scenario's phase and
// magnitude functions over its sample grid. Use h_max = 2 for three-phase
// and 3 for single-phase signals.
inline ValidityReport check_slow_variation(const ScenarioSpec& spec, int h_max) {
  if (h_max < 1 || h_max > 3) throw ValidationError("check_slow_variation: h_max must be 1, 2 or 3");
  for (const auto& p : spec.phases)
    if (!p.magnitude.is_symbolic() || !p.phase_mod.is_symbolic())
      throw UnsupportedSpecError("check_slow_variation: scenario '" + spec.label +
                                 "' uses a time function outside the closed algebra");
  const std::size_t n = std::max<std::size_t>(spec.sample_count(), 1);
  const double dt = spec.duration / static_cast<double>(n);

  ValidityReport report;
  for (int h = 1; h <= h_max; ++h) report.slow_variation.push_back({h, 0.0, 0.0});

  for (const auto& p : spec.phases) {
    double mean_v = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean_v += p.magnitude(static_cast<double>(k) * dt);
    mean_v /= static_cast<double>(n);
    TimeFunction dphi = p.phase_mod;
    TimeFunction dmag = p.magnitude;
    for (int h = 1; h <= h_max; ++h) {
      dphi = dphi.derivative();
      dmag = dmag.derivative();
      const double scale = std::pow(spec.omega_nominal, h);
      auto& m = report.slow_variation[static_cast<std::size_t>(h - 1)];
      for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        m.phase_ratio = std::max(m.phase_ratio, std::abs(dphi(t)) / scale);
        m.magnitude_ratio = std::max(m.magnitude_ratio, std::abs(dmag(t) / mean_v) / scale);
      }
    }
  }
  report.slow_variation_satisfied = report.max_ratio() < slow_variation_limit;
  return report;
}

// Fills fraction_valid and counts interior samples whose brackets disagree
// with the dominant orientation (or vanish).
inline void assess_brackets(ValidityReport& report, const PlanarTrajectory& tr, const FrequencyTrace& trace) {
  report.fraction_valid = trace.fraction_valid();
  report.bracket_sign_violations = 0;
  if (!tr.has_order(1)) return;
  const bool second = tr.has_order(2);
  const auto b = detail::brackets(tr, second);
  const auto g = detail::make_guard(b.position_velocity, tr, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (!tr.interior(k)) continue;
    const bool bad1 = !(g.orientation * b.position_velocity[k] > 0.0);
    const bool bad2 = second && !(g.orientation * b.velocity_acceleration[k] > 0.0);
    if (bad1 || bad2) ++report.bracket_sign_violations;
  }
}

} // namespace affreq
