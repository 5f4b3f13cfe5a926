#pragma once

// Synthetic three-phase and single-phase voltages with exact instantaneous
// frequency. Phase i of a three-phase set is
//
//     v_i(t) = V_i(t) sin(w_o t + phi_i(t) + s_i z_i),   s = (+1, -1, +1)
//
// so phase b carries -z_b and phase c carries +z_c. A single-phase signal is
// V(t) sin(w_o t + phi(t) + z). The exact instantaneous frequency of phase i
// is w_o + d(phi_i)/dt.

#include "affreq/config.hpp"
#include "affreq/error.hpp"
#include "affreq/signal.hpp"
#include "affreq/time_function.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace affreq {

inline constexpr double nominal_omega_50hz = 100.0 * std::numbers::pi;
inline constexpr double default_sample_rate = 10000.0;

struct PhaseSpec {
  TimeFunction magnitude = TimeFunction::constant(1.0); // volts
  TimeFunction phase_mod = TimeFunction::constant(0.0); // radians
  double displacement = 0.0;                            // radians
};

// Additive harmonic riding on every phase: fraction * V_i(t) * sin(order * arg_i(t)).
struct Harmonic {
  int order = 3;
  double fraction = 0.0;
};

struct NoiseSpec {
  double snr_db = 60.0;
  std::optional<std::uint64_t> seed; // 1 when unset
};

enum class ScenarioKind { three_phase, single_phase };

struct ScenarioSpec {
  std::string label;
  std::vector<PhaseSpec> phases;
  double omega_nominal = nominal_omega_50hz;
  double sample_rate = default_sample_rate;
  double duration = 1.0;
  std::vector<Harmonic> harmonics;
  std::optional<NoiseSpec> noise;

  ScenarioKind kind() const {
    return phases.size() == 1 ? ScenarioKind::single_phase : ScenarioKind::three_phase;
  }

  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::llround(duration * sample_rate));
  }

  void validate() const;
};

inline std::vector<std::string> phase_names(ScenarioKind kind) {
  if (kind == ScenarioKind::single_phase) return {"v"};
  return {"a", "b", "c"};
}

inline double displacement_sign(ScenarioKind kind, std::size_t phase) {
  return kind == ScenarioKind::three_phase && phase == 1 ? -1.0 : 1.0;
}

inline void ScenarioSpec::validate() const {
  const std::string who = "scenario '" + label + "': ";
  if (phases.size() != 1 && phases.size() != 3)
    throw ValidationError(who + "expected 1 or 3 phases, got " + std::to_string(phases.size()));
  if (!(omega_nominal > 0.0) || !std::isfinite(omega_nominal))
    throw ValidationError(who + "omega_nominal must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ValidationError(who + "duration must be positive");
  const double min_rate = 20.0 * omega_nominal / (2.0 * std::numbers::pi);
  if (!(sample_rate >= min_rate))
    throw ValidationError(who + "sample_rate " + std::to_string(sample_rate) +
                          " Hz is below 20 samples per nominal cycle (" + std::to_string(min_rate) + " Hz)");
  const std::size_t n = sample_count();
  if (n < SignalBuffer::min_length)
    throw ValidationError(who + "window holds fewer than " + std::to_string(SignalBuffer::min_length) +
                          " samples");
  for (const auto& h : harmonics)
    if (h.order < 2) throw ValidationError(who + "harmonic order must be >= 2");
  if (noise && !std::isfinite(noise->snr_db)) throw ValidationError(who + "noise SNR must be finite");
  const auto names = phase_names(kind());
  const double dt = 1.0 / sample_rate;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto& mag = phases[i].magnitude;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = mag(static_cast<double>(k) * dt);
      if (!(v > 0.0))
        throw ValidationError(who + "magnitude of phase " + names[i] + " is not positive at t = " +
                              std::to_string(static_cast<double>(k) * dt));
    }
  }
}

// Exact voltage of every phase as a closed-form time function (harmonics
// included, noise excluded).
inline std::vector<TimeFunction> channel_functions(const ScenarioSpec& spec) {
  std::vector<TimeFunction> out;
  const auto kind = spec.kind();
  for (std::size_t i = 0; i < spec.phases.size(); ++i) {
    const auto& p = spec.phases[i];
    const TimeFunction arg = spec.omega_nominal * TimeFunction::time() + p.phase_mod +
                             displacement_sign(kind, i) * p.displacement;
    TimeFunction v = p.magnitude * TimeFunction::sin(arg);
    for (const auto& h : spec.harmonics)
      v = v + h.fraction * (p.magnitude * TimeFunction::sin(static_cast<double>(h.order) * arg));
    out.push_back(v);
  }
  return out;
}

struct GeneratedSignal {
  SignalBuffer buffer;
  GroundTruth truth;
};

namespace detail {

inline GeneratedSignal generate(const ScenarioSpec& spec) {
  spec.validate();
  const auto names = phase_names(spec.kind());
  const std::size_t n = spec.sample_count();
  const double dt = 1.0 / spec.sample_rate;

  GeneratedSignal out;
  out.buffer.t0 = 0.0;
  out.buffer.dt = dt;
  out.buffer.units = Units::volts;
  out.truth.t0 = 0.0;
  out.truth.dt = dt;
  out.truth.phase_names = names;

  const auto funcs = channel_functions(spec);
  for (std::size_t i = 0; i < funcs.size(); ++i) {
    Channel ch{names[i], std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) ch.samples[k] = funcs[i](static_cast<double>(k) * dt);
    out.buffer.channels.push_back(std::move(ch));

    const TimeFunction phase_rate = spec.phases[i].phase_mod.derivative();
    std::vector<double> truth(n);
    for (std::size_t k = 0; k < n; ++k)
      truth[k] = (spec.omega_nominal + phase_rate(static_cast<double>(k) * dt)) / spec.omega_nominal;
    out.truth.per_phase_pu.push_back(std::move(truth));
  }
  out.truth.if_pu = out.truth.per_phase_pu.front();

  if (spec.noise) {
    std::mt19937_64 rng(spec.noise->seed.value_or(1));
    for (auto& ch : out.buffer.channels) {
      double power = 0.0;
      for (double x : ch.samples) power += x * x;
      power /= static_cast<double>(n);
      const double sigma = std::sqrt(power / std::pow(10.0, spec.noise->snr_db / 10.0));
      std::normal_distribution<double> gauss(0.0, sigma);
      for (double& x : ch.samples) x += gauss(rng);
    }
  }
  return out;
}

} // namespace detail

inline GeneratedSignal generate_three_phase(const ScenarioSpec& spec) {
  if (spec.phases.size() != 3)
    throw ValidationError("generate_three_phase: scenario '" + spec.label + "' has " +
                          std::to_string(spec.phases.size()) + " phases, expected 3");
  return detail::generate(spec);
}

inline GeneratedSignal generate_single_phase(const ScenarioSpec& spec) {
  if (spec.phases.size() != 1)
    throw ValidationError("generate_single_phase: scenario '" + spec.label + "' has " +
                          std::to_string(spec.phases.size()) + " phases, expected 1");
  return detail::generate(spec);
}

inline GeneratedSignal generate(const ScenarioSpec& spec) {
  return spec.kind() == ScenarioKind::single_phase ? generate_single_phase(spec)
                                                   : generate_three_phase(spec);
}

// ---------------------------------------------------------------------------
// Scenario catalog

inline std::map<std::string, ScenarioSpec> scenario_catalog() {
  using TF = TimeFunction;
  constexpr double pi = std::numbers::pi;
  const double wo = nominal_omega_50hz;
  const TF t = TF::time();
  const auto kv = [](double x) { return TF::constant(1000.0 * x); };

  const auto three = [&](std::string label, double duration, std::array<TF, 3> mags,
                         std::array<TF, 3> phis, double zb, double zc) {
    ScenarioSpec s;
    s.label = std::move(label);
    s.duration = duration;
    s.phases = {PhaseSpec{mags[0], phis[0], 0.0}, PhaseSpec{mags[1], phis[1], zb},
                PhaseSpec{mags[2], phis[2], zc}};
    return s;
  };

  const TF zero = TF::constant(0.0);
  const TF v12 = kv(12);
  const TF v12_mod = kv(12) + 3000.0 * TF::sin(pi * t);
  const TF v8_mod = kv(8) + 2000.0 * TF::sin(2.0 * pi * t);
  const TF phi6 = pi * TF::sin(0.4 * pi * t);
  const TF phi7c = 1.1 * pi * TF::sin(0.4 * pi * t);
  const double z = 2.0 * pi / 3.0;

  std::map<std::string, ScenarioSpec> cat;
  auto add = [&](ScenarioSpec s) { cat.emplace(s.label, std::move(s)); };
  add(three("E1", 2.0, {v12, v12, v12}, {zero, zero, zero}, z, z));
  add(three("E2", 2.0, {v12_mod, v12_mod, v12_mod}, {zero, zero, zero}, z, z));
  add(three("E3", 2.0, {v12, kv(8), v12}, {zero, zero, zero}, z, z));
  add(three("E4", 2.0, {v12_mod, v8_mod, v12_mod}, {zero, zero, zero}, z, z));
  add(three("E5", 2.0, {v12, v12, v12}, {zero, zero, zero}, -2.0 * pi / 3.0, 1.5 * pi / 3.0));
  add(three("E6", 5.0, {v12, v12, v12}, {phi6, phi6, phi6}, z, z));
  add(three("E7", 5.0, {v12, v12, v12}, {phi6, phi6, phi7c}, z, z));

  ScenarioSpec sp;
  sp.label = "SP";
  sp.duration = 5.0;
  sp.phases = {PhaseSpec{v12, 0.05 * wo * (TF::exp(-t) * (TF::constant(1.0) - TF::cos(pi * t))), 0.0}};
  add(std::move(sp));
  return cat;
}

inline ScenarioSpec find_scenario(const std::string& label) {
  auto cat = scenario_catalog();
  auto it = cat.find(label);
  if (it == cat.end()) throw NotFoundError("no scenario named '" + label + "' in the catalog");
  return it->second;
}

// ---------------------------------------------------------------------------
// Text serialization. Keys:
//   label, kind (three_phase | single_phase), omega_nominal, sample_rate,
//   duration, phase.<name>.{magnitude,phase_mod,displacement},
//   harmonics = "order:fraction, ...", noise.snr_db, noise.seed
// Numeric values accept constant expressions (e.g. "100*pi").

namespace detail {

inline std::string format_shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

inline double constant_expr(const KeyValueFile& kv, const std::string& key) {
  const TimeFunction f = TimeFunction::parse(kv.get(key));
  if (!f.is_constant()) throw ParseError(key + ": expected a constant, got '" + kv.get(key) + "'");
  return f.constant_value();
}

} // namespace detail

inline std::uint64_t parse_seed(std::string_view text) {
  const auto s = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("seed: expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline KeyValueFile to_config(const ScenarioSpec& spec) {
  using detail::format_shortest;
  KeyValueFile kv;
  kv.set("label", spec.label);
  kv.set("kind", spec.kind() == ScenarioKind::single_phase ? "single_phase" : "three_phase");
  kv.set("omega_nominal", format_shortest(spec.omega_nominal));
  kv.set("sample_rate", format_shortest(spec.sample_rate));
  kv.set("duration", format_shortest(spec.duration));
  const auto names = phase_names(spec.kind());
  for (std::size_t i = 0; i < spec.phases.size() && i < names.size(); ++i) {
    const std::string prefix = "phase." + names[i] + ".";
    kv.set(prefix + "magnitude", spec.phases[i].magnitude.to_string());
    kv.set(prefix + "phase_mod", spec.phases[i].phase_mod.to_string());
    kv.set(prefix + "displacement", format_shortest(spec.phases[i].displacement));
  }
  if (!spec.harmonics.empty()) {
    std::string h;
    for (const auto& hm : spec.harmonics) {
      if (!h.empty()) h += ", ";
      h += std::to_string(hm.order) + ":" + format_shortest(hm.fraction);
    }
    kv.set("harmonics", h);
  }
  if (spec.noise) {
    kv.set("noise.snr_db", format_shortest(spec.noise->snr_db));
    if (spec.noise->seed) kv.set("noise.seed", std::to_string(*spec.noise->seed));
  }
  return kv;
}

inline ScenarioSpec from_config(const KeyValueFile& kv) {
  ScenarioSpec spec;
  spec.label = kv.get_or("label", "custom");
  const std::string kind = kv.get_or("kind", "three_phase");
  ScenarioKind k;
  if (kind == "three_phase") k = ScenarioKind::three_phase;
  else if (kind == "single_phase") k = ScenarioKind::single_phase;
  else throw ParseError("kind: expected three_phase or single_phase, got '" + kind + "'");

  if (kv.has("omega_nominal")) spec.omega_nominal = detail::constant_expr(kv, "omega_nominal");
  if (kv.has("sample_rate")) spec.sample_rate = detail::constant_expr(kv, "sample_rate");
  if (kv.has("duration")) spec.duration = detail::constant_expr(kv, "duration");

  for (const auto& name : phase_names(k)) {
    const std::string prefix = "phase." + name + ".";
    PhaseSpec p;
    p.magnitude = TimeFunction::parse(kv.get(prefix + "magnitude"));
    p.phase_mod = TimeFunction::parse(kv.get_or(prefix + "phase_mod", "0"));
    if (kv.has(prefix + "displacement")) p.displacement = detail::constant_expr(kv, prefix + "displacement");
    spec.phases.push_back(std::move(p));
  }

  if (kv.has("harmonics")) {
    for (const auto& item : split(kv.get("harmonics"), ',')) {
      if (item.empty()) continue;
      const auto parts = split(item, ':');
      if (parts.size() != 2) throw ParseError("harmonics: expected 'order:fraction', got '" + item + "'");
      Harmonic h;
      h.order = static_cast<int>(parse_double(parts[0], "harmonic order"));
      h.fraction = parse_double(parts[1], "harmonic fraction");
      spec.harmonics.push_back(h);
    }
  }
  if (kv.has("noise.snr_db")) {
    NoiseSpec n;
    n.snr_db = kv.number("noise.snr_db");
    if (kv.has("noise.seed")) n.seed = parse_seed(kv.get("noise.seed"));
    spec.noise = n;
  }
  return spec;
}

} // namespace affreq
