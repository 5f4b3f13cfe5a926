#pragma once

// CSV waveform ingestion/export and frequency-trace export.
//
//   three-phase waveform: t,va,vb,vc     single-phase waveform: t,v
//   trace file:           t,<estimator>...[,if_true]   (invalid samples empty)
//   truth file:           t,if_true[,if_a,if_b,if_c]
//
// Waveform samples are written in shortest round-trip form; traces, truth and
// reports use 12 significant digits.

#include "affreq/config.hpp"
#include "affreq/error.hpp"
#include "affreq/geometry.hpp"
#include "affreq/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace affreq {

class SchemaError : public ParseError {
public:
  using ParseError::ParseError;
};

enum class WaveSchema { three_phase, single_phase };

inline WaveSchema wave_schema_from_string(std::string_view s) {
  if (s == "three_phase") return WaveSchema::three_phase;
  if (s == "single_phase") return WaveSchema::single_phase;
  throw ValidationError("unknown schema '" + std::string(s) + "' (expected three_phase or single_phase)");
}

inline constexpr int csv_significant_digits = 12;
inline constexpr double uniform_jitter_tolerance = 1e-6;

inline std::string format_number(double v, int digits = csv_significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Shortest text that parses back to the same double; used for waveform
// samples so that a CSV round trip does not perturb derivative estimates.
inline std::string format_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ReadOptions {
  bool resample = false;
};

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError(path + ": empty file");
  return table;
}

inline std::size_t column_index(const CsvTable& t, std::string_view name, const std::string& path) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw SchemaError(path + ": missing column '" + std::string(name) + "'");
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

} // namespace detail

// Linear interpolation of (t, x) onto t0 + k*dt for k = 0 .. n-1.
inline std::vector<double> resample_linear(const std::vector<double>& t, const std::vector<double>& x, double t0,
                                           double dt, std::size_t n) {
  std::vector<double> out(n);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = t0 + static_cast<double>(k) * dt;
    while (j + 2 < t.size() && t[j + 1] < tk) ++j;
    const double f = (tk - t[j]) / (t[j + 1] - t[j]);
    out[k] = x[j] + f * (x[j + 1] - x[j]);
  }
  return out;
}

inline SignalBuffer read_waveform_csv(const std::string& path, WaveSchema schema, ReadOptions opts = {}) {
  const auto table = detail::read_csv(path);
  const std::vector<std::string> value_cols =
      schema == WaveSchema::three_phase ? std::vector<std::string>{"va", "vb", "vc"} : std::vector<std::string>{"v"};
  const std::vector<std::string> channel_names =
      schema == WaveSchema::three_phase ? std::vector<std::string>{"a", "b", "c"} : std::vector<std::string>{"v"};

  const std::size_t it = detail::column_index(table, "t", path);
  std::vector<std::size_t> iv;
  for (const auto& c : value_cols) iv.push_back(detail::column_index(table, c, path));

  const std::size_t n = table.rows.size();
  if (n < SignalBuffer::min_length)
    throw ParseError(path + ": need at least " + std::to_string(SignalBuffer::min_length) + " samples, got " +
                     std::to_string(n));
  std::vector<double> t(n);
  std::vector<std::vector<double>> x(iv.size(), std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::string where = path + ": row " + std::to_string(r + 1);
    t[r] = parse_double(table.rows[r][it], where + " column t");
    for (std::size_t c = 0; c < iv.size(); ++c)
      x[c][r] = parse_double(table.rows[r][iv[c]], where + " column " + value_cols[c]);
    if (r > 0 && !(t[r] > t[r - 1]))
      throw ParseError(path + ": time is not strictly increasing at row " + std::to_string(r + 1));
  }

  std::vector<double> steps(n - 1);
  for (std::size_t r = 1; r < n; ++r) steps[r - 1] = t[r] - t[r - 1];
  const double median_dt = detail::median_of(steps);
  double jitter = 0.0;
  for (double s : steps) jitter = std::max(jitter, std::abs(s - median_dt) / median_dt);

  SignalBuffer buf;
  buf.t0 = t.front();
  buf.units = Units::volts;
  if (jitter <= uniform_jitter_tolerance) {
    buf.dt = (t.back() - t.front()) / static_cast<double>(n - 1);
    for (std::size_t c = 0; c < iv.size(); ++c) buf.channels.push_back({channel_names[c], std::move(x[c])});
  } else if (opts.resample) {
    buf.dt = median_dt;
    const auto m = static_cast<std::size_t>(std::floor((t.back() - t.front()) / median_dt * (1.0 + 1e-12))) + 1;
    for (std::size_t c = 0; c < iv.size(); ++c)
      buf.channels.push_back({channel_names[c], resample_linear(t, x[c], buf.t0, buf.dt, m)});
  } else {
    throw ValidationError(path + ": sample times are not uniform (max relative step deviation " +
                          format_number(jitter, 3) + " > 1e-6); enable resampling to interpolate onto a uniform grid");
  }
  buf.validate();
  return buf;
}

inline void write_waveform_csv(const std::string& path, const SignalBuffer& buf) {
  buf.validate();
  std::vector<std::string> header{"t"};
  if (buf.channels.size() == 3 && buf.has_channel("a") && buf.has_channel("b") && buf.has_channel("c")) {
    header.insert(header.end(), {"va", "vb", "vc"});
  } else if (buf.channels.size() == 1) {
    header.emplace_back("v");
  } else {
    throw ValidationError("write_waveform_csv: expected channels a, b, c or a single channel");
  }
  std::vector<const std::vector<double>*> cols;
  if (buf.channels.size() == 3)
    for (const char* name : {"a", "b", "c"}) cols.push_back(&buf.channel(name));
  else
    cols.push_back(&buf.channels.front().samples);

  auto out = detail::open_for_write(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (std::size_t k = 0; k < buf.size(); ++k) {
    out << format_exact(buf.time(k));
    for (const auto* c : cols) out << ',' << format_exact((*c)[k]);
    out << '\n';
  }
  detail::finish_write(out, path);
}

inline void write_trace_csv(const std::string& path, const std::vector<FrequencyTrace>& traces,
                            const GroundTruth* truth = nullptr) {
  if (traces.empty() && !truth) throw ValidationError("write_trace_csv: nothing to write");
  const std::size_t n = traces.empty() ? truth->size() : traces.front().size();
  for (const auto& tr : traces)
    if (tr.size() != n) throw ValidationError("write_trace_csv: traces differ in length");
  if (truth && truth->size() != n) throw ValidationError("write_trace_csv: ground truth length differs");
  const double t0 = traces.empty() ? truth->t0 : traces.front().t0;
  const double dt = traces.empty() ? truth->dt : traces.front().dt;

  auto out = detail::open_for_write(path);
  out << 't';
  for (const auto& tr : traces) out << ',' << to_string(tr.estimator);
  if (truth) out << ",if_true";
  out << '\n';
  for (std::size_t k = 0; k < n; ++k) {
    out << format_number(t0 + static_cast<double>(k) * dt);
    for (const auto& tr : traces) {
      out << ',';
      if (tr.valid[k] || tr.repaired[k]) out << format_number(tr.omega[k]);
    }
    if (truth) out << ',' << format_number(truth->if_pu[k]);
    out << '\n';
  }
  detail::finish_write(out, path);
}

inline void write_truth_csv(const std::string& path, const GroundTruth& truth) {
  auto out = detail::open_for_write(path);
  out << "t,if_true";
  if (truth.per_phase_pu.size() > 1)
    for (const auto& name : truth.phase_names) out << ",if_" << name;
  out << '\n';
  for (std::size_t k = 0; k < truth.size(); ++k) {
    out << format_number(truth.t0 + static_cast<double>(k) * truth.dt) << ',' << format_number(truth.if_pu[k]);
    if (truth.per_phase_pu.size() > 1)
      for (const auto& p : truth.per_phase_pu) out << ',' << format_number(p[k]);
    out << '\n';
  }
  detail::finish_write(out, path);
}

// Generic numeric CSV with optional (empty) fields, as written by
// write_trace_csv.
struct TraceTable {
  std::vector<std::string> columns; // excluding t
  std::vector<double> t;
  std::vector<std::vector<std::optional<double>>> values; // [column][row]

  const std::vector<std::optional<double>>& column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return values[i];
    throw NotFoundError("trace table has no column '" + std::string(name) + "'");
  }
};

inline TraceTable read_trace_csv(const std::string& path) {
  const auto table = detail::read_csv(path);
  const std::size_t it = detail::column_index(table, "t", path);
  TraceTable out;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (i != it) {
      out.columns.push_back(table.header[i]);
      idx.push_back(i);
    }
  out.values.assign(idx.size(), {});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out.t.push_back(parse_double(table.rows[r][it], path + " column t"));
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const auto& f = table.rows[r][idx[c]];
      out.values[c].push_back(f.empty() ? std::nullopt : std::optional<double>(parse_double(f, path)));
    }
  }
  return out;
}

// Ground truth from a truth file (t, if_true[, if_<phase>...]).
inline GroundTruth read_truth_csv(const std::string& path) {
  const auto tt = read_trace_csv(path);
  if (tt.t.size() < 2) throw ParseError(path + ": truth file needs at least 2 rows");
  GroundTruth g;
  g.t0 = tt.t.front();
  g.dt = (tt.t.back() - tt.t.front()) / static_cast<double>(tt.t.size() - 1);
  for (const auto& v : tt.column("if_true")) {
    if (!v) throw ParseError(path + ": empty if_true field");
    g.if_pu.push_back(*v);
  }
  return g;
}

} // namespace affreq
