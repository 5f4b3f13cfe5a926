#pragma once

// Projection of voltages onto the plane and sample-wise time derivatives.

#include "affreq/error.hpp"
#include "affreq/signal.hpp"
#include "affreq/time_function.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace affreq {

using Vec2 = std::array<double, 2>;

// Signed area of the parallelogram spanned by a and b.
constexpr double bracket(const Vec2& a, const Vec2& b) { return a[0] * b[1] - b[0] * a[1]; }

// ---------------------------------------------------------------------------
// Clarke transform (power invariant)

inline constexpr double clarke_scale = 0.81649658092772603273; // sqrt(2/3)
inline constexpr double half_sqrt3 = 0.86602540378443864676;

constexpr Vec2 clarke(double a, double b, double c) {
  return {clarke_scale * (a - 0.5 * b - 0.5 * c), clarke_scale * half_sqrt3 * (b - c)};
}

inline SignalBuffer clarke(const SignalBuffer& abc) {
  const auto& a = abc.channel("a");
  const auto& b = abc.channel("b");
  const auto& c = abc.channel("c");
  if (a.size() != b.size() || a.size() != c.size())
    throw ValidationError("clarke: channels a, b, c differ in length");
  SignalBuffer out;
  out.t0 = abc.t0;
  out.dt = abc.dt;
  out.units = abc.units;
  out.channels = {Channel{"alpha", std::vector<double>(a.size())}, Channel{"beta", std::vector<double>(a.size())}};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vec2 ab = clarke(a[k], b[k], c[k]);
    out.channels[0].samples[k] = ab[0];
    out.channels[1].samples[k] = ab[1];
  }
  return out;
}

inline std::array<TimeFunction, 2> clarke(const TimeFunction& a, const TimeFunction& b, const TimeFunction& c) {
  return {clarke_scale * (a - 0.5 * b - 0.5 * c), clarke_scale * half_sqrt3 * (b - c)};
}

// ---------------------------------------------------------------------------
// Per-unit scaling

struct PuScaling {
  SignalBuffer buffer;
  double base = 1.0;
};

// Peak amplitude implied by the RMS over the first `window_cycles` nominal
// cycles, pooled over all channels: sqrt(2 * mean(x^2)).
inline double rms_amplitude(const SignalBuffer& buf, double omega_nominal, double window_cycles = 1.0) {
  const std::size_t n = buf.size();
  const auto window = static_cast<std::size_t>(
      std::llround(window_cycles * 2.0 * std::numbers::pi / (omega_nominal * buf.dt)));
  const std::size_t m = std::clamp<std::size_t>(window, 1, n);
  double sum = 0.0;
  for (const auto& ch : buf.channels)
    for (std::size_t k = 0; k < m; ++k) sum += ch.samples[k] * ch.samples[k];
  return std::sqrt(2.0 * sum / static_cast<double>(m * buf.channels.size()));
}

// Divides every channel by `base`, or by rms_amplitude() when no base is
// given. A zero or non-finite base leaves the samples unscaled.
inline PuScaling to_pu(const SignalBuffer& buf, double omega_nominal, std::optional<double> base = {},
                       double window_cycles = 1.0) {
  PuScaling out{buf, base.value_or(rms_amplitude(buf, omega_nominal, window_cycles))};
  if (!(out.base > 0.0) || !std::isfinite(out.base)) out.base = 1.0;
  for (auto& ch : out.buffer.channels)
    for (double& x : ch.samples) x /= out.base;
  out.buffer.units = Units::pu;
  return out;
}

// ---------------------------------------------------------------------------
// Central finite differences

// Fornberg's recursion for the weights of the `order`-th derivative at 0 on
// the grid offsets -m..m (unit spacing).
inline std::vector<double> central_weights(int order, int halfwidth) {
  const int npts = 2 * halfwidth + 1;
  std::vector<double> x(npts);
  for (int i = 0; i < npts; ++i) x[i] = static_cast<double>(i - halfwidth);
  // c[j][k]: weight of point j for derivative k
  std::vector<std::vector<double>> c(npts, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0];
  c[0][0] = 1.0;
  for (int i = 1; i < npts; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(npts);
  for (int i = 0; i < npts; ++i) w[i] = c[i][order];
  // exact antisymmetry / symmetry of central stencils
  for (int i = 0; i < halfwidth; ++i) {
    const double sign = order % 2 == 0 ? 1.0 : -1.0;
    const double avg = 0.5 * (w[i] + sign * w[npts - 1 - i]);
    w[i] = avg;
    w[npts - 1 - i] = sign * avg;
  }
  if (order % 2 == 1) w[halfwidth] = 0.0;
  return w;
}

struct DerivativeConfig {
  // Even accuracy order of every central stencil; 4 gives 5-point stencils
  // for the first and second derivative and a 7-point third derivative.
  int accuracy = 4;

  int halfwidth(int order) const { return (order + 1) / 2 + accuracy / 2 - 1; }

  int stencil_halfwidth(const std::set<int>& orders) const {
    int m = 0;
    for (int d : orders) m = std::max(m, halfwidth(d));
    return m;
  }

  void validate() const {
    if (accuracy < 2 || accuracy > 12 || accuracy % 2 != 0)
      throw ValidationError("derivative accuracy must be an even order in [2, 12], got " +
                            std::to_string(accuracy));
  }
};

// Derivative of `order` of uniformly sampled x. Samples closer than the
// stencil half-width to either edge are NaN.
inline std::vector<double> central_derivative(std::span<const double> x, double dt, int order,
                                              const DerivativeConfig& cfg) {
  cfg.validate();
  if (order < 1 || order > 3) throw ValidationError("derivative order must be 1, 2 or 3");
  const int m = cfg.halfwidth(order);
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(2 * m + 1))
    throw ValidationError("buffer of " + std::to_string(n) + " samples is too short for a " +
                          std::to_string(2 * m + 1) + "-point stencil");
  const auto w = central_weights(order, m);
  const double scale = 1.0 / std::pow(dt, order);
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = static_cast<std::size_t>(m); k + static_cast<std::size_t>(m) < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= 2 * m; ++j) acc += w[j] * x[k + j - m];
    out[k] = acc * scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planar trajectory

// The curve (v1, v2) with its time derivatives. Derivative sequences are
// only meaningful for samples in [margin, size - margin); outside they are NaN.
struct PlanarTrajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> v1, v2;
  std::vector<double> d1_v1, d1_v2;
  std::vector<double> d2_v1, d2_v2;
  std::vector<double> d3_v1, d3_v2;
  std::size_t margin = 0;

  std::size_t size() const { return v1.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  bool interior(std::size_t k) const { return k >= margin && k + margin < size(); }

  bool has_order(int order) const {
    switch (order) {
    case 1: return d1_v1.size() == size() && d1_v2.size() == size();
    case 2: return d2_v1.size() == size() && d2_v2.size() == size();
    case 3: return d3_v1.size() == size() && d3_v2.size() == size();
    default: return false;
    }
  }

  Vec2 position(std::size_t k) const { return {v1[k], v2[k]}; }
  Vec2 velocity(std::size_t k) const { return {d1_v1[k], d1_v2[k]}; }
  Vec2 acceleration(std::size_t k) const { return {d2_v1[k], d2_v2[k]}; }
};

inline PlanarTrajectory differentiate(const SignalBuffer& buffer, const std::set<int>& orders,
                                      const DerivativeConfig& cfg = {}) {
  buffer.validate();
  if (buffer.channels.size() != 2)
    throw ValidationError("differentiate: expected 2 channels, got " + std::to_string(buffer.channels.size()));
  for (int d : orders)
    if (d < 1 || d > 3) throw ValidationError("differentiate: orders must be drawn from {1, 2, 3}");
  cfg.validate();
  const int m = cfg.stencil_halfwidth(orders);
  if (buffer.size() < static_cast<std::size_t>(2 * m + 1))
    throw ValidationError("differentiate: buffer of " + std::to_string(buffer.size()) +
                          " samples is shorter than the " + std::to_string(2 * m + 1) + "-point stencil");

  PlanarTrajectory tr;
  tr.t0 = buffer.t0;
  tr.dt = buffer.dt;
  tr.v1 = buffer.channels[0].samples;
  tr.v2 = buffer.channels[1].samples;
  tr.margin = static_cast<std::size_t>(m);
  auto fill = [&](int order, std::vector<double>& a, std::vector<double>& b) {
    a = central_derivative(tr.v1, tr.dt, order, cfg);
    b = central_derivative(tr.v2, tr.dt, order, cfg);
  };
  if (orders.count(1)) fill(1, tr.d1_v1, tr.d1_v2);
  if (orders.count(2)) fill(2, tr.d2_v1, tr.d2_v2);
  if (orders.count(3)) fill(3, tr.d3_v1, tr.d3_v2);
  // one margin for all orders
  auto mask = [&](std::vector<double>& s) {
    if (s.empty()) return;
    for (std::size_t k = 0; k < s.size(); ++k)
      if (!tr.interior(k)) s[k] = std::numeric_limits<double>::quiet_NaN();
  };
  for (auto* s : {&tr.d1_v1, &tr.d1_v2, &tr.d2_v1, &tr.d2_v2, &tr.d3_v1, &tr.d3_v2}) mask(*s);
  return tr;
}

// Single-phase embedding: v1 = v, v2 = dv/dt. The second derivative of the
// embedded curve needs the third derivative of v.
inline PlanarTrajectory quadrature_embed(const SignalBuffer& v, const DerivativeConfig& cfg = {}) {
  v.validate();
  if (v.channels.size() != 1)
    throw ValidationError("quadrature_embed: expected 1 channel, got " + std::to_string(v.channels.size()));
  cfg.validate();
  const int m = cfg.stencil_halfwidth({1, 2, 3});
  if (v.size() < static_cast<std::size_t>(2 * m + 1))
    throw ValidationError("quadrature_embed: buffer of " + std::to_string(v.size()) +
                          " samples is shorter than the " + std::to_string(2 * m + 1) + "-point stencil");
  const auto& x = v.channels[0].samples;
  auto d1 = central_derivative(x, v.dt, 1, cfg);
  auto d2 = central_derivative(x, v.dt, 2, cfg);
  auto d3 = central_derivative(x, v.dt, 3, cfg);

  PlanarTrajectory tr;
  tr.t0 = v.t0;
  tr.dt = v.dt;
  tr.margin = static_cast<std::size_t>(m);
  tr.v1 = x;
  tr.v2 = d1;
  tr.d1_v1 = d1;
  tr.d1_v2 = d2;
  tr.d2_v1 = d2;
  tr.d2_v2 = std::move(d3);
  for (auto* s : {&tr.v2, &tr.d1_v1, &tr.d1_v2, &tr.d2_v1, &tr.d2_v2})
    for (std::size_t k = 0; k < s->size(); ++k)
      if (!tr.interior(k)) (*s)[k] = std::numeric_limits<double>::quiet_NaN();
  // keep v2 finite at the edges so position-only consumers see a full curve
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (!tr.interior(k)) tr.v2[k] = 0.0;
  return tr;
}

// Exact trajectory of the curve (f1(t), f2(t)) with symbolic derivatives up
// to `max_order`, sampled at t0 + k*dt. No edge margin.
inline PlanarTrajectory analytic_trajectory(const TimeFunction& f1, const TimeFunction& f2, double t0, double dt,
                                            std::size_t n, int max_order = 2) {
  PlanarTrajectory tr;
  tr.t0 = t0;
  tr.dt = dt;
  auto sample = [&](const TimeFunction& f) {
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = f(t0 + static_cast<double>(k) * dt);
    return s;
  };
  tr.v1 = sample(f1);
  tr.v2 = sample(f2);
  TimeFunction g1 = f1, g2 = f2;
  for (int d = 1; d <= max_order; ++d) {
    g1 = g1.derivative();
    g2 = g2.derivative();
    auto s1 = sample(g1);
    auto s2 = sample(g2);
    if (d == 1) { tr.d1_v1 = std::move(s1); tr.d1_v2 = std::move(s2); }
    if (d == 2) { tr.d2_v1 = std::move(s1); tr.d2_v2 = std::move(s2); }
    if (d == 3) { tr.d3_v1 = std::move(s1); tr.d3_v2 = std::move(s2); }
  }
  return tr;
}

} // namespace affreq
