#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage/validation error,
// 2 I/O or parse error.

#include "affreq/affreq.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace affreq::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_io = 2;

inline constexpr const char* seed_env_var = "AFFINE_FREQ_SEED";

inline ScenarioSpec resolve_scenario(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) return from_config(KeyValueFile::load(name_or_path));
  return find_scenario(name_or_path);
}

// Fills in the noise seed from AFFINE_FREQ_SEED when the scenario leaves it open.
inline void apply_seed_env(ScenarioSpec& spec) {
  if (!spec.noise || spec.noise->seed) return;
  if (const char* env = std::getenv(seed_env_var); env && *env) spec.noise->seed = parse_seed(env);
}

inline EstimatorConfig load_estimator_config(const std::string& path, ScenarioKind kind) {
  KeyValueFile kv;
  if (!path.empty()) kv = KeyValueFile::load(path);
  EstimatorConfig cfg = estimator_config_from(kv);
  if (!kv.has("estimators") && kind == ScenarioKind::single_phase)
    cfg.estimators = {Estimator::affine, Estimator::delay_pll};
  return cfg;
}

inline void write_report_files(const std::string& prefix, const MetricsReport& rep) {
  {
    std::ofstream txt(prefix + ".txt");
    if (!txt) throw IoError("cannot write '" + prefix + ".txt'");
    write_report_table(txt, rep);
    if (!txt) throw IoError("error while writing '" + prefix + ".txt'");
  }
  std::ofstream kvf(prefix + ".kv");
  if (!kvf) throw IoError("cannot write '" + prefix + ".kv'");
  report_key_values(rep).write(kvf);
  if (!kvf) throw IoError("error while writing '" + prefix + ".kv'");
}

inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instantaneous frequency estimation with affine differential geometry", "affreq"};
  app.require_subcommand(1);

  auto* catalog = app.add_subcommand("catalog", "List the built-in scenarios");

  std::string sim_scenario, sim_out, sim_truth, sim_save;
  std::optional<double> sim_duration, sim_rate, sim_snr;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario waveform as CSV");
  simulate->add_option("scenario", sim_scenario, "Catalog label or scenario config file")->required();
  simulate->add_option("--out", sim_out, "Waveform CSV to write")->required();
  simulate->add_option("--truth", sim_truth, "Ground-truth CSV to write");
  simulate->add_option("--duration", sim_duration, "Override duration (s)");
  simulate->add_option("--sample-rate", sim_rate, "Override sample rate (Hz)");
  simulate->add_option("--snr-db", sim_snr, "Add white noise at this SNR (dB)");
  simulate->add_option("--seed", sim_seed, "Noise seed (default: $AFFINE_FREQ_SEED or 1)");
  simulate->add_option("--save-config", sim_save, "Write the resolved scenario config");

  std::string est_in, est_schema = "three_phase", est_config, est_out, est_truth, est_report;
  bool est_resample = false;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate frequency from a waveform CSV");
  estimate_cmd->add_option("--in", est_in, "Waveform CSV")->required();
  estimate_cmd->add_option("--schema", est_schema, "three_phase or single_phase")
      ->check(CLI::IsMember({"three_phase", "single_phase"}));
  estimate_cmd->add_option("--config", est_config, "Estimator config file");
  estimate_cmd->add_option("--out", est_out, "Trace CSV to write")->required();
  estimate_cmd->add_option("--truth", est_truth, "Ground-truth CSV; enables error metrics");
  estimate_cmd->add_option("--report", est_report, "Write metrics to <prefix>.txt and <prefix>.kv");
  estimate_cmd->add_flag("--resample", est_resample, "Interpolate non-uniform time stamps onto a uniform grid");

  std::string cmp_scenario, cmp_estimators, cmp_config, cmp_out, cmp_trace;
  std::optional<double> cmp_snr;
  std::optional<std::uint64_t> cmp_seed;
  auto* compare = app.add_subcommand("compare", "Run estimators on a scenario and report metrics");
  compare->add_option("scenario", cmp_scenario, "Catalog label or scenario config file")->required();
  compare->add_option("--estimators", cmp_estimators, "Comma-separated subset of affine,frenet,srf_pll,delay_pll");
  compare->add_option("--config", cmp_config, "Estimator config file");
  compare->add_option("--out", cmp_out, "Write report to <prefix>.txt and <prefix>.kv");
  compare->add_option("--trace-out", cmp_trace, "Trace CSV to write");
  compare->add_option("--snr-db", cmp_snr, "Add white noise at this SNR (dB)");
  compare->add_option("--seed", cmp_seed, "Noise seed (default: $AFFINE_FREQ_SEED or 1)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_validation;
  }

  auto with_noise = [](ScenarioSpec& spec, const std::optional<double>& snr, const std::optional<std::uint64_t>& seed) {
    if (snr) spec.noise = NoiseSpec{*snr, seed};
    else if (seed && spec.noise) spec.noise->seed = seed;
    apply_seed_env(spec);
  };

  try {
    if (*catalog) {
      for (const auto& [label, spec] : scenario_catalog()) {
        out << label << "  " << (spec.kind() == ScenarioKind::single_phase ? "single_phase" : "three_phase")
            << "  duration=" << format_number(spec.duration) << " s";
        const auto names = phase_names(spec.kind());
        for (std::size_t i = 0; i < spec.phases.size(); ++i)
          out << "  V" << names[i] << "=" << spec.phases[i].magnitude.to_string();
        out << '\n';
      }
      return exit_ok;
    }

    if (*simulate) {
      ScenarioSpec spec = resolve_scenario(sim_scenario);
      if (sim_duration) spec.duration = *sim_duration;
      if (sim_rate) spec.sample_rate = *sim_rate;
      with_noise(spec, sim_snr, sim_seed);
      const auto gen = generate(spec);
      write_waveform_csv(sim_out, gen.buffer);
      if (!sim_truth.empty()) write_truth_csv(sim_truth, gen.truth);
      if (!sim_save.empty()) {
        std::ofstream cfg(sim_save);
        if (!cfg) throw IoError("cannot write '" + sim_save + "'");
        to_config(spec).write(cfg);
      }
      out << "wrote " << gen.buffer.size() << " samples of '" << spec.label << "' to " << sim_out << '\n';
      return exit_ok;
    }

    if (*estimate_cmd) {
      const auto schema = wave_schema_from_string(est_schema);
      const auto kind = schema == WaveSchema::single_phase ? ScenarioKind::single_phase : ScenarioKind::three_phase;
      const auto cfg = load_estimator_config(est_config, kind);
      const auto wave = read_waveform_csv(est_in, schema, ReadOptions{est_resample});
      const auto res = estimate(wave, cfg);
      std::optional<GroundTruth> truth;
      if (!est_truth.empty()) {
        truth = read_truth_csv(est_truth);
        if (truth->size() != wave.size())
          throw ValidationError("truth file has " + std::to_string(truth->size()) + " rows, waveform has " +
                                std::to_string(wave.size()));
      }
      write_trace_csv(est_out, res.traces, truth ? &*truth : nullptr);
      auto rep = compute_metrics(res.traces, truth ? &*truth : nullptr, cfg.settle_s);
      rep.scenario = est_in;
      write_report_table(out, rep);
      if (!est_report.empty()) write_report_files(est_report, rep);
      for (const auto& tr : res.traces)
        for (const auto& w : tr.warnings) err << "warning: " << w << '\n';
      return exit_ok;
    }

    if (*compare) {
      ScenarioSpec spec = resolve_scenario(cmp_scenario);
      with_noise(spec, cmp_snr, cmp_seed);
      auto cfg = load_estimator_config(cmp_config, spec.kind());
      cfg.nominal_hz = spec.omega_nominal / (2.0 * std::numbers::pi);
      if (!cmp_estimators.empty()) cfg.estimators = parse_estimator_list(cmp_estimators);
      const auto gen = generate(spec);
      const auto res = estimate(gen.buffer, cfg);
      auto rep = compute_metrics(res.traces, &gen.truth, cfg.settle_s);
      rep.scenario = spec.label;
      write_report_table(out, rep);
      if (!cmp_out.empty()) write_report_files(cmp_out, rep);
      if (!cmp_trace.empty()) write_trace_csv(cmp_trace, res.traces, &gen.truth);
      for (const auto& tr : res.traces)
        for (const auto& w : tr.warnings) err << "warning: " << w << '\n';
      return exit_ok;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  }
  err << app.help();
  return exit_validation;
}

} // namespace affreq::cli
