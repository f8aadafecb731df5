#pragma once

#include "franson/physics_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace franson {

enum class ExperimentKind { Simulate, Analyze, PhaseScan, PowerSweep, ShgScan };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string &name);

struct ShgScanSettings {
  double t_peak_c = 47.5;
  double fwhm_c = 3.53;
  double p_max_mw = 1.0;
  double noise_rel = 0.02; ///< relative sigma of multiplicative Gaussian noise
};

/// One batch run: the physics, the scan grids and the acquisition settings.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::PhaseScan;
  ExperimentParams params;
  std::vector<double> phases_rad;     ///< phase scan grid
  std::vector<double> powers_mw;      ///< power sweep grid
  std::vector<double> temperatures_c; ///< SHG scan grid
  /// Phases acquired at every sweep power; the first one feeds the per-power report.
  std::vector<double> sweep_phases_rad;
  double phase_rad = 0.0; ///< single-shot simulate / analyze
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned workers = 1;

  std::int64_t bin_width_ps = 200;
  std::int64_t lag_range_ps = 10'100; ///< histogram covers [-range, range)
  std::int64_t window_half_width_ps = 100;
  std::int64_t side_half_width_ps = 300;
  bool correct_coincidence_dead_time = true;
  bool fit_alpha = true;

  ShgScanSettings shg;
};

/// Throws InvalidParameter when a grid needed by `kind` is empty or settings are
/// inconsistent.
void validate(const RunConfig &config);

/// The calibrated preset: 800 ps imbalance, 50 ps jitter, 50 ns dead time,
/// 200 ps bins, +-100 ps window, 100 GHz filters, eta = 4.8 %, V0 = 0.971,
/// 100 /s darks, P = 1.7 mW. The pair coefficient (4e6 s^-1 mW^-2) is an
/// approximate calibration that puts CAR near 1e3 at 1 mW.
RunConfig paper_preset(ExperimentKind kind = ExperimentKind::PhaseScan);

/// `n` equally spaced phases on [0, 2 pi).
std::vector<double> uniform_phase_grid(std::size_t n);

/// Flat JSON object with unit-suffixed keys. Keys absent from `j` keep the
/// value already in `base`; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json &j, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig &config);
RunConfig load_config(const std::filesystem::path &path, RunConfig base = {});

} // namespace franson
