#pragma once

#include "affreq/error.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace affreq {

enum class Units { volts, pu };

struct Channel {
  std::string name;
  std::vector<double> samples;
};

// Uniformly sampled multi-channel waveform. Sample k of every channel is
// taken at t0 + k*dt.
struct SignalBuffer {
  static constexpr std::size_t min_length = 4;

  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Channel> channels;
  Units units = Units::volts;

  std::size_t size() const { return channels.empty() ? 0 : channels.front().samples.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double duration() const { return static_cast<double>(size()) * dt; }

  bool has_channel(std::string_view name) const {
    return std::any_of(channels.begin(), channels.end(),
                       [&](const Channel& c) { return c.name == name; });
  }

  const std::vector<double>& channel(std::string_view name) const {
    for (const auto& c : channels)
      if (c.name == name) return c.samples;
    throw ValidationError("signal buffer has no channel '" + std::string(name) + "'");
  }

  void validate() const {
    if (!(dt > 0.0)) throw ValidationError("signal buffer: dt must be positive");
    if (channels.empty()) throw ValidationError("signal buffer: no channels");
    const std::size_t n = channels.front().samples.size();
    if (n < min_length)
      throw ValidationError("signal buffer: need at least " + std::to_string(min_length) +
                            " samples, got " + std::to_string(n));
    for (const auto& c : channels)
      if (c.samples.size() != n)
        throw ValidationError("signal buffer: channel '" + c.name + "' has length " +
                              std::to_string(c.samples.size()) + ", expected " + std::to_string(n));
  }
};

// Exact instantaneous frequency of a synthetic waveform, in pu of the
// nominal angular frequency. `if_pu` is the scalar reference (phase a for
// three-phase signals); `per_phase_pu` keeps every phase.
struct GroundTruth {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> if_pu;
  std::vector<std::string> phase_names;
  std::vector<std::vector<double>> per_phase_pu;

  std::size_t size() const { return if_pu.size(); }
};

} // namespace affreq
