#pragma once

// Second-order Butterworth low-pass biquad (bilinear transform with
// pre-warping) and its application as a causal or zero-phase filter.

#include "affreq/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace affreq {

// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct BiquadCoeffs {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
  double cutoff_hz = 0.0;
  double sample_rate = 0.0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  std::complex<double> response(double freq_hz) const {
    const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }

  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

  // roots of z^2 + a1 z + a2
  std::array<std::complex<double>, 2> poles() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2));
    return {(-a1 + disc) / 2.0, (-a1 - disc) / 2.0};
  }

  bool stable() const {
    const auto p = poles();
    return std::abs(p[0]) < 1.0 && std::abs(p[1]) < 1.0;
  }
};

inline BiquadCoeffs design_butterworth2(double cutoff_hz, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ValidationError("butterworth: sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0))
    throw ValidationError("butterworth: cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, " +
                          std::to_string(sample_rate / 2.0) + ") Hz");
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  BiquadCoeffs c;
  c.b0 = k2 * norm;
  c.b1 = 2.0 * c.b0;
  c.b2 = c.b0;
  c.a1 = 2.0 * (k2 - 1.0) * norm;
  c.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  c.cutoff_hz = cutoff_hz;
  c.sample_rate = sample_rate;
  return c;
}

enum class FilterMode { causal, zero_phase };
enum class FilterInit { steady_state, zero };

inline std::string_view to_string(FilterMode m) { return m == FilterMode::causal ? "causal" : "zero_phase"; }

inline FilterMode filter_mode_from_string(std::string_view s) {
  if (s == "causal") return FilterMode::causal;
  if (s == "zero_phase") return FilterMode::zero_phase;
  throw ValidationError("unknown filter mode '" + std::string(s) + "' (expected causal or zero_phase)");
}

namespace detail {

// Direct form II transposed, in place.
inline void run_biquad(const BiquadCoeffs& c, std::vector<double>& x, FilterInit init) {
  double s1 = 0.0, s2 = 0.0;
  if (init == FilterInit::steady_state && !x.empty()) {
    const double x0 = x.front();
    const double g = c.dc_gain();
    s2 = (c.b2 - c.a2 * g) * x0;
    s1 = (c.b1 - c.a1 * g) * x0 + s2;
  }
  for (double& v : x) {
    const double in = v;
    const double y = c.b0 * in + s1;
    s1 = c.b1 * in - c.a1 * y + s2;
    s2 = c.b2 * in - c.a2 * y;
    v = y;
  }
}

} // namespace detail

// Samples until the slowest pole has decayed to `tol`: the span at each end
// of a filtered record that still carries edge transients.
inline std::size_t transient_length(const BiquadCoeffs& c, double tol = 1e-9) {
  const auto p = c.poles();
  const double r = std::max(std::abs(p[0]), std::abs(p[1]));
  if (!(r > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(r)));
}

// Samples of odd-reflection padding used on each side in zero-phase mode.
inline std::size_t zero_phase_padding(const BiquadCoeffs& c, std::size_t n) {
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * c.sample_rate / c.cutoff_hz));
  return n == 0 ? 0 : std::min(pad, n - 1);
}

namespace detail {

// Value at x[0] of the least-squares line through x[0 .. m-1] (stride +1 or -1).
inline double line_fit_end(std::span<const double> x, std::size_t m, bool from_back) {
  if (m < 2) return from_back ? x.back() : x.front();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double u = static_cast<double>(i);
    const double y = from_back ? x[x.size() - 1 - i] : x[i];
    sx += u;
    sy += y;
    sxx += u * u;
    sxy += u * y;
  }
  const double n = static_cast<double>(m);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return (sy - slope * sx) / n;
}

} // namespace detail

// Zero-phase mode filters forward then backward (squared magnitude, no phase
// shift) over a signal extended at both ends by odd reflection. The
// reflection centre is a line fitted over the padding window rather than the
// end sample, so a noisy end sample does not pin the output.
inline std::vector<double> filter_apply(const BiquadCoeffs& c, std::span<const double> x,
                                        FilterMode mode = FilterMode::causal,
                                        FilterInit init = FilterInit::steady_state) {
  if (x.empty()) throw ValidationError("filter_apply: empty input");
  if (mode == FilterMode::causal) {
    std::vector<double> y(x.begin(), x.end());
    detail::run_biquad(c, y, init);
    return y;
  }
  const std::size_t n = x.size();
  const std::size_t pad = zero_phase_padding(c, n);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  const double head = detail::line_fit_end(x, pad + 1, false);
  const double tail = detail::line_fit_end(x, pad + 1, true);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * head - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * tail - x[n - 1 - i]);
  detail::run_biquad(c, ext, init);
  std::reverse(ext.begin(), ext.end());
  detail::run_biquad(c, ext, init);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

} // namespace affreq
