#pragma once

// End-to-end estimation: per-unit scaling, optional pre-filter, planar
// projection, numerical derivatives, estimators, optional post-filter; and
// metrics against ground truth.

#include "affreq/config.hpp"
#include "affreq/csv.hpp"
#include "affreq/error.hpp"
#include "affreq/filtering.hpp"
#include "affreq/geometry.hpp"
#include "affreq/pll.hpp"
#include "affreq/signal.hpp"
#include "affreq/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace affreq {

struct FilterSetting {
  double cutoff_hz = 0.0;
  FilterMode mode = FilterMode::zero_phase;
};

inline constexpr double default_prefilter_hz = 500.0;
inline constexpr double default_postfilter_hz = 25.0;
inline constexpr double default_settle_s = 0.2;

struct EstimatorConfig {
  double nominal_hz = 50.0;
  DerivativeConfig derivative;
  std::optional<FilterSetting> prefilter;
  std::optional<FilterSetting> postfilter;
  double guard = default_guard;
  std::vector<Estimator> estimators{Estimator::affine, Estimator::frenet, Estimator::srf_pll};
  PllConfig pll = PllConfig::defaults(nominal_omega_50hz);
  double settle_s = default_settle_s;
  bool repair_invalid = false;
  std::optional<double> pu_base; // volts; RMS of the first window when unset
  double pu_window_cycles = 1.0;

  double omega_nominal() const { return 2.0 * std::numbers::pi * nominal_hz; }

  void validate() const {
    if (!(nominal_hz > 0.0)) throw ValidationError("estimator config: nominal_hz must be positive");
    if (estimators.empty()) throw ValidationError("estimator config: no estimators selected");
    if (!(guard >= 0.0)) throw ValidationError("estimator config: guard must be non-negative");
    if (!(settle_s >= 0.0)) throw ValidationError("estimator config: settle_s must be non-negative");
    if (!(pu_window_cycles > 0.0)) throw ValidationError("estimator config: pu.window_cycles must be positive");
    derivative.validate();
    pll.validate();
  }
};

inline std::vector<Estimator> parse_estimator_list(std::string_view text) {
  std::vector<Estimator> out;
  for (const auto& item : split(text, ','))
    if (!item.empty()) out.push_back(estimator_from_string(item));
  if (out.empty()) throw ValidationError("empty estimator list");
  return out;
}

inline std::string estimator_list_string(const std::vector<Estimator>& es) {
  std::string s;
  for (auto e : es) {
    if (!s.empty()) s += ',';
    s += to_string(e);
  }
  return s;
}

// Keys: nominal_hz, derivative.accuracy, guard, estimators, settle_s,
// repair_invalid, pu.base, pu.window_cycles, prefilter.cutoff_hz,
// prefilter.mode, postfilter.cutoff_hz, postfilter.mode, pll.kp, pll.ki,
// pll.omega_init, pll.tau. A filter is enabled by giving its cutoff.
inline EstimatorConfig estimator_config_from(const KeyValueFile& kv) {
  static const std::vector<std::string> known{
      "nominal_hz",          "derivative.accuracy", "guard",           "estimators",          "settle_s",
      "repair_invalid",      "pu.base",             "pu.window_cycles", "prefilter.cutoff_hz", "prefilter.mode",
      "postfilter.cutoff_hz", "postfilter.mode",    "pll.kp",          "pll.ki",              "pll.omega_init",
      "pll.tau"};
  for (const auto& [k, v] : kv.entries())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ParseError("estimator config: unknown key '" + k + "'");

  EstimatorConfig c;
  c.nominal_hz = kv.number_or("nominal_hz", c.nominal_hz);
  c.pll = PllConfig::defaults(c.omega_nominal());
  if (kv.has("derivative.accuracy")) c.derivative.accuracy = static_cast<int>(kv.number("derivative.accuracy"));
  c.guard = kv.number_or("guard", c.guard);
  if (kv.has("estimators")) c.estimators = parse_estimator_list(kv.get("estimators"));
  c.settle_s = kv.number_or("settle_s", c.settle_s);
  c.repair_invalid = kv.flag_or("repair_invalid", c.repair_invalid);
  if (kv.has("pu.base")) c.pu_base = kv.number("pu.base");
  c.pu_window_cycles = kv.number_or("pu.window_cycles", c.pu_window_cycles);
  auto filter = [&](const std::string& prefix) -> std::optional<FilterSetting> {
    if (!kv.has(prefix + ".cutoff_hz")) {
      if (kv.has(prefix + ".mode")) throw ParseError(prefix + ".mode given without " + prefix + ".cutoff_hz");
      return std::nullopt;
    }
    FilterSetting f;
    f.cutoff_hz = kv.number(prefix + ".cutoff_hz");
    f.mode = filter_mode_from_string(kv.get_or(prefix + ".mode", "zero_phase"));
    return f;
  };
  c.prefilter = filter("prefilter");
  c.postfilter = filter("postfilter");
  c.pll.kp = kv.number_or("pll.kp", c.pll.kp);
  c.pll.ki = kv.number_or("pll.ki", c.pll.ki);
  c.pll.omega_init = kv.number_or("pll.omega_init", c.pll.omega_init);
  c.pll.tau = kv.number_or("pll.tau", c.pll.tau);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Estimation

struct EstimationResult {
  std::vector<FrequencyTrace> traces;
  PlanarTrajectory trajectory;
  double pu_base = 1.0;
  ValidityReport validity; // bracket diagnostics of the first geometric trace
};

// Smooths the valid span of a trace. Invalid samples inside the span are
// bridged by linear interpolation for filtering only; flags are unchanged.
inline void postfilter_trace(FrequencyTrace& trace, const FilterSetting& f) {
  const std::size_t n = trace.size();
  std::size_t first = 0;
  while (first < n && !trace.valid[first]) ++first;
  if (first == n) return;
  std::size_t last = n - 1;
  while (!trace.valid[last]) --last;
  std::vector<double> span(trace.omega.begin() + static_cast<std::ptrdiff_t>(first),
                           trace.omega.begin() + static_cast<std::ptrdiff_t>(last + 1));
  std::size_t prev = 0;
  for (std::size_t i = 1; i < span.size(); ++i) {
    if (!trace.valid[first + i]) continue;
    for (std::size_t j = prev + 1; j < i; ++j)
      span[j] = span[prev] + (span[i] - span[prev]) * static_cast<double>(j - prev) / static_cast<double>(i - prev);
    prev = i;
  }
  const auto coeffs = design_butterworth2(f.cutoff_hz, 1.0 / trace.dt);
  const auto y = filter_apply(coeffs, span, f.mode);
  for (std::size_t i = 0; i < y.size(); ++i)
    if (trace.valid[first + i] || trace.repaired[first + i]) trace.omega[first + i] = y[i];
}

inline EstimationResult estimate(const SignalBuffer& volts, const EstimatorConfig& cfg) {
  volts.validate();
  cfg.validate();
  const double wo = cfg.omega_nominal();
  const bool three = volts.channels.size() == 3;
  if (!three && volts.channels.size() != 1)
    throw ValidationError("estimate: expected a three-phase (a, b, c) or single-channel buffer");

  EstimationResult res;
  auto pu = to_pu(volts, wo, cfg.pu_base, cfg.pu_window_cycles);
  res.pu_base = pu.base;
  SignalBuffer signal = std::move(pu.buffer);
  std::size_t edge = 0; // samples at each end still settling from the pre-filter
  if (cfg.prefilter) {
    const auto coeffs = design_butterworth2(cfg.prefilter->cutoff_hz, 1.0 / signal.dt);
    for (auto& ch : signal.channels) ch.samples = filter_apply(coeffs, ch.samples, cfg.prefilter->mode);
    edge = transient_length(coeffs);
  }

  std::optional<SignalBuffer> alpha_beta;
  if (three) {
    alpha_beta = clarke(signal);
    res.trajectory = differentiate(*alpha_beta, {1, 2}, cfg.derivative);
  } else {
    res.trajectory = quadrature_embed(signal, cfg.derivative);
  }
  res.trajectory.margin = std::max(res.trajectory.margin, edge);

  for (const auto e : cfg.estimators) {
    FrequencyTrace tr;
    switch (e) {
    case Estimator::affine: tr = omega_affine(res.trajectory, wo, cfg.guard); break;
    case Estimator::frenet: tr = omega_frenet(res.trajectory, wo, cfg.guard); break;
    case Estimator::srf_pll:
      if (!three) throw ValidationError("estimate: srf_pll needs a three-phase input");
      tr = srf_pll_run(*alpha_beta, cfg.pll, wo);
      break;
    case Estimator::delay_pll:
      if (three) throw ValidationError("estimate: delay_pll needs a single-phase input");
      tr = delay_pll_run(signal, cfg.pll, wo);
      break;
    }
    for (std::size_t k = 0; k < tr.size(); ++k)
      if (k < edge || k + edge >= tr.size()) tr.valid[k] = 0, tr.omega[k] = 0.0;
    if (cfg.repair_invalid) repair_invalid(tr, wo);
    if (cfg.postfilter) postfilter_trace(tr, *cfg.postfilter);
    res.traces.push_back(std::move(tr));
  }
  for (const auto& tr : res.traces)
    if (tr.estimator == Estimator::affine || tr.estimator == Estimator::frenet) {
      assess_brackets(res.validity, res.trajectory, tr);
      break;
    }
  return res;
}

// ---------------------------------------------------------------------------
// Metrics

inline constexpr double default_settle_band = 1e-2;

struct EstimatorMetrics {
  Estimator estimator = Estimator::affine;
  std::optional<double> rmse_pu;          // needs ground truth
  std::optional<double> max_abs_error_pu; // needs ground truth
  double ripple_pp_pu = 0.0;
  double settle_time_s = 0.0;
  double fraction_valid = 0.0;
  std::size_t samples_used = 0;
};

struct MetricsReport {
  std::string scenario;
  double settle_s = default_settle_s;
  bool has_truth = false;
  std::vector<EstimatorMetrics> rows;

  const EstimatorMetrics& at(Estimator e) const {
    for (const auto& r : rows)
      if (r.estimator == e) return r;
    throw NotFoundError("metrics report has no row for '" + std::string(to_string(e)) + "'");
  }
};

// Metrics over valid samples at or after t0 + settle_s. With ground truth
// the ripple is the peak-to-peak of the error; without it, the peak-to-peak
// of the trace itself and the settle band is taken about its median.
// settle_time_s is the time after which every valid sample stays within
// `settle_band` pu of the reference (the trace duration if it never does).
inline MetricsReport compute_metrics(const std::vector<FrequencyTrace>& traces, const GroundTruth* truth,
                                     double settle_s, double settle_band = default_settle_band) {
  MetricsReport rep;
  rep.settle_s = settle_s;
  rep.has_truth = truth != nullptr;
  if (traces.empty()) return rep;
  const std::size_t n = traces.front().size();
  const double dt = traces.front().dt;
  const double duration = static_cast<double>(n) * dt;
  if (!(settle_s >= 0.0) || settle_s >= duration)
    throw ValidationError("compute_metrics: settle window " + format_number(settle_s) + " s exceeds the " +
                          format_number(duration) + " s trace");
  for (const auto& tr : traces)
    if (tr.size() != n || std::abs(tr.dt - dt) > 1e-12 * dt || std::abs(tr.t0 - traces.front().t0) > 1e-9)
      throw ValidationError("compute_metrics: traces do not share a time base");
  if (truth && truth->size() != n) throw ValidationError("compute_metrics: ground truth length differs from traces");
  const auto start = static_cast<std::size_t>(std::ceil(settle_s / dt - 1e-9));

  for (const auto& tr : traces) {
    EstimatorMetrics m;
    m.estimator = tr.estimator;
    m.fraction_valid = tr.fraction_valid();
    std::vector<double> after;
    for (std::size_t k = start; k < n; ++k)
      if (tr.valid[k]) after.push_back(tr.omega[k]);
    const double centre = detail::median_of(after);
    auto reference = [&](std::size_t k) { return truth ? truth->if_pu[k] : centre; };

    double sq = 0.0, max_abs = 0.0, lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t k = start; k < n; ++k) {
      if (!tr.valid[k]) continue;
      const double e = tr.omega[k] - (truth ? truth->if_pu[k] : 0.0);
      sq += e * e;
      max_abs = std::max(max_abs, std::abs(e));
      lo = first ? e : std::min(lo, e);
      hi = first ? e : std::max(hi, e);
      first = false;
      ++m.samples_used;
    }
    if (m.samples_used > 0) {
      m.ripple_pp_pu = hi - lo;
      if (truth) {
        m.rmse_pu = std::sqrt(sq / static_cast<double>(m.samples_used));
        m.max_abs_error_pu = max_abs;
      }
    }
    m.settle_time_s = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      if (!tr.valid[k]) continue;
      if (std::abs(tr.omega[k] - reference(k)) > settle_band) {
        m.settle_time_s = static_cast<double>(k + 1) * dt;
        break;
      }
    }
    rep.rows.push_back(m);
  }
  return rep;
}

inline std::string metric_field(const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; }

inline void write_report_table(std::ostream& out, const MetricsReport& rep) {
  out << "scenario: " << (rep.scenario.empty() ? "-" : rep.scenario) << "  settle_s: " << format_number(rep.settle_s)
      << "  truth: " << (rep.has_truth ? "yes" : "no") << '\n';
  const char* headers[] = {"estimator", "rmse_pu", "max_abs_error_pu", "ripple_pp_pu", "settle_time_s",
                           "fraction_valid"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back({std::begin(headers), std::end(headers)});
  for (const auto& r : rep.rows)
    cells.push_back({std::string(to_string(r.estimator)), metric_field(r.rmse_pu), metric_field(r.max_abs_error_pu),
                     format_number(r.ripple_pp_pu), format_number(r.settle_time_s), format_number(r.fraction_valid)});
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      if (i + 1 < row.size()) out << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      else out << row[i];
    }
    out << '\n';
  }
}

inline KeyValueFile report_key_values(const MetricsReport& rep) {
  KeyValueFile kv;
  kv.set("scenario", rep.scenario);
  kv.set("settle_s", format_number(rep.settle_s));
  kv.set("has_truth", rep.has_truth ? "true" : "false");
  for (const auto& r : rep.rows) {
    const std::string p = std::string(to_string(r.estimator)) + ".";
    if (r.rmse_pu) kv.set(p + "rmse_pu", format_number(*r.rmse_pu));
    if (r.max_abs_error_pu) kv.set(p + "max_abs_error_pu", format_number(*r.max_abs_error_pu));
    kv.set(p + "ripple_pp_pu", format_number(r.ripple_pp_pu));
    kv.set(p + "settle_time_s", format_number(r.settle_time_s));
    kv.set(p + "fraction_valid", format_number(r.fraction_valid));
    kv.set(p + "samples_used", std::to_string(r.samples_used));
  }
  return kv;
}

} // namespace affreq
