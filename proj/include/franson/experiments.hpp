#pragma once

#include "franson/coincidence.hpp"
#include "franson/config.hpp"
#include "franson/estimators.hpp"
#include "franson/fitters.hpp"
#include "franson/timetag_sim.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace franson {

struct FringePoint {
  double phase_rad = 0.0;
  double counts = 0.0;      ///< central-window integral
  double accidentals = 0.0; ///< baseline estimate scaled to the window
  double duration_s = 0.0;
};

using FringeScan = std::vector<FringePoint>;

/// Histogram, report and window integrals of one acquisition.
struct Acquisition {
  double phase_rad = 0.0;
  CoincidenceHistogram histogram;
  AnalysisReport report;
  BaselineEstimate baseline;
  std::uint64_t central_counts = 0;
  std::uint64_t side_sl_counts = 0; ///< window around -delta_t
  std::uint64_t side_ls_counts = 0; ///< window around +delta_t
  double window_accidentals = 0.0;
};

/// Histogram + estimators + baseline on a pair of streams; the same path serves
/// simulated and file-loaded data.
Acquisition analyze_streams(const TimeTagStream &signal, const TimeTagStream &idler,
                            const RunConfig &config, double phase_rad = 0.0);

/// Simulates one acquisition at `phase_rad` and analyzes it.
Acquisition acquire(const RunConfig &config, double phase_rad, std::uint64_t seed);

struct VisibilitySummary {
  double v_raw = 0.0;
  double v_raw_sigma = 0.0;
  double v_net = 0.0;
  std::optional<FitResult> fit; ///< absent when the grid is too short to fit
  double v_fit() const;
  double v_fit_sigma() const;
};

/// Raw and net contrast from the scan extrema; sinusoid fit when >= 8 points.
VisibilitySummary summarize_fringe(const FringeScan &scan, bool fit_alpha);

struct PhaseScanResult {
  FringeScan scan;
  std::vector<Acquisition> points;
  VisibilitySummary visibility;
};

/// For every phase: simulate, histogram, integrate the central window and run
/// the estimators; then fit the fringe. When `out_dir` is set the fringe CSV is
/// written before fitting so a failed fit still leaves the data behind.
PhaseScanResult run_phase_scan(const RunConfig &config,
                               const std::optional<std::filesystem::path> &out_dir = {});

struct SweepPoint {
  double power_mw = 0.0;
  AnalysisReport report; ///< at the first sweep phase
  std::vector<Acquisition> phases;
  VisibilitySummary visibility;
};

struct PowerSweepResult {
  std::vector<SweepPoint> points;
  FitResult pair_rate_fit; ///< log10 r_pair vs log10 P
  FitResult car_fit;
};

PowerSweepResult run_power_sweep(const RunConfig &config,
                                 const std::optional<std::filesystem::path> &out_dir = {});

struct ShgScanResult {
  std::vector<double> temperatures_c;
  std::vector<double> powers_mw;
  FitResult fit;
};

/// Evaluates the sinc^2 response with multiplicative Gaussian noise and fits it.
ShgScanResult run_shg_scan(const RunConfig &config,
                           const std::optional<std::filesystem::path> &out_dir = {});

// Output formats. Numbers are printed with a fixed %.10g so that identical
// inputs give byte-identical files.

std::string format_number(double v);
std::string histogram_csv(const CoincidenceHistogram &hist);
std::string fringe_csv(const FringeScan &scan);
std::string sweep_csv(const PowerSweepResult &sweep);
/// Side-peak (analyzer-corrected) efficiencies and pair rates per power.
std::string sweep_side_csv(const PowerSweepResult &sweep);
std::string shg_csv(const ShgScanResult &shg);
std::string report_key_value(const AnalysisReport &report);
std::string report_csv_header();
std::string report_csv_row(const AnalysisReport &report);
std::string fit_key_value(const FitResult &fit, const std::string &prefix);
std::string visibility_key_value(const VisibilitySummary &v);

void write_text(const std::filesystem::path &path, const std::string &content);

} // namespace franson
