// Batch front end: simulate, analyze tag files, run scans, print predictions.

#include "franson/config.hpp"
#include "franson/errors.hpp"
#include "franson/experiments.hpp"
#include "franson/rng.hpp"
#include "franson/timetag_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>

using namespace franson;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2, kNoConvergence = 3 };

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string preset;
  std::optional<unsigned> workers;
};

void add_common(CLI::App *sub, CommonFlags &f) {
  sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master RNG seed");
  sub->add_option("--out", f.out_dir, "output directory");
  sub->add_option("--preset", f.preset, "parameter preset")->check(CLI::IsMember({"paper"}));
  sub->add_option("--workers", f.workers, "concurrent scan points");
}

RunConfig resolve(const CommonFlags &f, ExperimentKind kind) {
  RunConfig c = f.preset == "paper" ? paper_preset(kind) : RunConfig{};
  if (!f.config_path.empty())
    c = load_config(f.config_path, c);
  c.kind = kind;
  if (f.seed)
    c.seed = *f.seed;
  if (!f.out_dir.empty())
    c.output_dir = f.out_dir;
  if (f.workers)
    c.workers = *f.workers;
  return c;
}

void write_acquisition(const std::filesystem::path &dir, const Acquisition &acq) {
  write_text(dir / "histogram.csv", histogram_csv(acq.histogram));
  write_text(dir / "report.txt", report_key_value(acq.report));
  write_text(dir / "report.csv", report_csv_header() + report_csv_row(acq.report));
}

bool converged(const VisibilitySummary &v) { return !v.fit || v.fit->converged; }

int run_simulate(const RunConfig &c) {
  validate(c);
  const SimulatedTags tags = simulate(c.params, c.phase_rad, c.duration_s, c.seed, c.workers);
  write_timetags(tags.signal, c.output_dir / "signal.ftag");
  write_timetags(tags.idler, c.output_dir / "idler.ftag");
  const Acquisition acq = analyze_streams(tags.signal, tags.idler, c, c.phase_rad);
  write_acquisition(c.output_dir, acq);
  std::cout << "signal_tags = " << tags.signal.size() << "\nidler_tags = " << tags.idler.size()
            << "\n"
            << report_key_value(acq.report);
  return kOk;
}

int run_analyze(const RunConfig &c, const std::string &signal_path, const std::string &idler_path) {
  validate(c);
  const TimeTagStream s = read_timetags(signal_path);
  const TimeTagStream i = read_timetags(idler_path);
  const Acquisition acq = analyze_streams(s, i, c, c.phase_rad);
  write_acquisition(c.output_dir, acq);
  std::cout << report_key_value(acq.report);
  return kOk;
}

int run_phase(const RunConfig &c) {
  const PhaseScanResult r = run_phase_scan(c, c.output_dir);
  std::string rows = "phase_rad," + report_csv_header();
  for (const auto &p : r.points)
    rows += format_number(p.phase_rad) + "," + report_csv_row(p.report);
  write_text(c.output_dir / "reports.csv", rows);
  const std::string summary = visibility_key_value(r.visibility);
  write_text(c.output_dir / "summary.txt", summary);
  std::cout << summary;
  return converged(r.visibility) ? kOk : kNoConvergence;
}

int run_sweep(const RunConfig &c) {
  const PowerSweepResult r = run_power_sweep(c, c.output_dir);
  const std::string summary =
      fit_key_value(r.pair_rate_fit, "r_pair_") + fit_key_value(r.car_fit, "car_");
  write_text(c.output_dir / "summary.txt", summary);
  std::cout << summary;
  bool ok = r.pair_rate_fit.converged && r.car_fit.converged;
  for (const auto &p : r.points)
    ok = ok && converged(p.visibility);
  return ok ? kOk : kNoConvergence;
}

int run_shg(const RunConfig &c) {
  const ShgScanResult r = run_shg_scan(c, c.output_dir);
  const std::string summary = fit_key_value(r.fit, "shg_");
  write_text(c.output_dir / "summary.txt", summary);
  std::cout << summary;
  return r.fit.converged ? kOk : kNoConvergence;
}

int run_report(const RunConfig &c) {
  validate(c.params);
  const ExperimentParams &p = c.params;
  const double tau_w = 2.0 * static_cast<double>(c.window_half_width_ps) * 1e-12;
  const double ss = expected_singles_rate_s(p), si = expected_singles_rate_i(p);
  const double dead = static_cast<double>(p.dead_time_ps) * 1e-12;
  std::cout << "pair_rate = " << format_number(expected_pair_rate(p)) << "\n"
            << "singles_s = " << format_number(ss) << "\n"
            << "singles_i = " << format_number(si) << "\n"
            << "singles_s_dead_time_loaded = " << format_number(dead_time_loaded_rate(ss, dead))
            << "\n"
            << "singles_i_dead_time_loaded = " << format_number(dead_time_loaded_rate(si, dead))
            << "\n"
            << "accidentals_in_window = " << format_number(ss * si * tau_w) << "\n"
            << "coherence_time_ps = " << format_number(coherence_time_ps(p.filter_bandwidth_hz))
            << "\n"
            << "timing_sigma_ps = " << format_number(effective_timing_sigma_ps(p)) << "\n"
            << "fringe_max = "
            << format_number(expected_fringe(p, -p.phase_offset_rad,
                                             static_cast<double>(c.window_half_width_ps)))
            << "\n"
            << "fringe_min = "
            << format_number(expected_fringe(p, std::acos(-1.0) - p.phase_offset_rad,
                                             static_cast<double>(c.window_half_width_ps)))
            << "\n";
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Franson energy-time interferometer: time-tag simulation and analysis"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string signal_path, idler_path;
  std::optional<double> phase;

  auto *sim = app.add_subcommand("simulate", "simulate one acquisition and write FTAG files");
  auto *ana = app.add_subcommand("analyze", "analyze a pair of FTAG files");
  auto *phs = app.add_subcommand("phase-scan", "fringe scan and visibility fit");
  auto *pwr = app.add_subcommand("power-sweep", "pair-rate and CAR scaling with pump power");
  auto *shg = app.add_subcommand("shg-scan", "SHG temperature tuning curve and fit");
  auto *rep = app.add_subcommand("report", "print closed-form predictions for a configuration");
  for (auto *s : {sim, ana, phs, pwr, shg, rep})
    add_common(s, flags);
  for (auto *s : {sim, ana})
    s->add_option("--phase", phase, "interferometer phase (rad)");
  ana->add_option("--signal", signal_path, "signal-channel FTAG file")->required();
  ana->add_option("--idler", idler_path, "idler-channel FTAG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto kind_of = [&]() {
    if (*sim || *rep)
      return ExperimentKind::Simulate;
    if (*ana)
      return ExperimentKind::Analyze;
    if (*phs)
      return ExperimentKind::PhaseScan;
    if (*pwr)
      return ExperimentKind::PowerSweep;
    return ExperimentKind::ShgScan;
  };

  RunConfig config;
  try {
    config = resolve(flags, kind_of());
    if (phase)
      config.phase_rad = *phase;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*sim)
      return run_simulate(config);
    if (*ana)
      return run_analyze(config, signal_path, idler_path);
    if (*phs)
      return run_phase(config);
    if (*pwr)
      return run_sweep(config);
    if (*shg)
      return run_shg(config);
    return run_report(config);
  } catch (const InvalidParameter &e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const InitializationError &e) {
    std::cerr << "fit did not start: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
