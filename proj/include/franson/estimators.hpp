#pragma once

#include "franson/coincidence.hpp"
#include "franson/physics_model.hpp"

#include <cstdint>
#include <utility>

namespace franson {

/// A derived quantity with its first-order statistical uncertainty.
struct Measured {
  double value = 0.0;
  double sigma = 0.0;
};

// Rate formulas. Rates in s^-1, times in seconds.

/// Dark-subtracted, non-paralyzable dead-time corrected singles rate.
/// Throws SaturationError when (s_raw - dark) * dead_time >= 1.
double corrected_singles(double s_raw, double dark, double dead_time_s);

double accidental_rate(double s_prime_s, double s_prime_i, double tau_w_s);

/// c_meas - a_h. Negative results are returned as-is.
double true_coincidences(double c_meas, double a_h);

/// {eta_s, eta_i} = {c_true / S'_i, c_true / S'_s}.
std::pair<double, double> heralding_efficiencies(double c_true, double s_prime_s,
                                                 double s_prime_i);

double inferred_pair_rate(double c_true, double eta_s, double eta_i);

struct CarValue {
  double value = 0.0;
  bool infinite = false; ///< set when no accidentals are expected
};

CarValue car(double c_true, double a_h);

/// (c_max - c_min) / (c_max + c_min).
double visibility_raw(double c_max, double c_min);

/// Contrast after removing the accidental level a_window from both extrema.
double visibility_net(double c_max, double c_min, double a_window);

/// First-order Poisson uncertainty of visibility_raw on integrated counts.
double visibility_raw_sigma(double c_max, double c_min);

/// Everything the analysis chain needs beyond the histogram itself.
struct AnalysisOptions {
  double dark_rate_s = 0.0;
  double dark_rate_i = 0.0;
  double dead_time_s = 0.0;
  std::int64_t window_half_width_ps = 100; ///< coincidence window, tau_w = 2 x this
  std::int64_t delta_t_ps = 800;
  std::int64_t side_half_width_ps = 300;   ///< side-peak integration half width
  double timing_sigma_ps = 70.710678;      ///< for the window acceptance corrections
  /// Divide measured coincidences by both detectors' live fractions
  /// (1 - S_raw tau_dead) so they refer to the same true rates as S'.
  bool correct_coincidence_dead_time = true;
};

AnalysisOptions analysis_options_for(const ExperimentParams &params);

/// Derived estimates of a single histogram acquisition.
///
/// Uncertainties propagate Poisson errors of the singles counts, the central
/// window counts and the side-window counts to first order, treating those
/// counts as independent.
struct AnalysisReport {
  double duration_s = 0.0;
  Measured s_raw_s, s_raw_i;
  Measured s_prime_s, s_prime_i;
  Measured a_h;    ///< accidentals expected in the central window
  Measured c_meas; ///< central-window coincidences, dead-time corrected if enabled
  Measured c_true;
  Measured eta_s, eta_i; ///< windowed heralding efficiencies
  Measured r_pair;
  Measured car;
  bool car_infinite = false;
  bool c_true_negative = false;

  /// Side-peak variants: phase independent, corrected for the analyzer's fixed
  /// 1/4 side-peak share and for the Gaussian window acceptance.
  Measured c_side_true;
  Measured eta_s_side, eta_i_side;
  Measured r_pair_side;

  double central_window_acceptance = 1.0;
  double side_window_acceptance = 1.0;
  double live_fraction_s = 1.0;
  double live_fraction_i = 1.0;
};

/// Runs the rate corrections on a signal-minus-idler histogram whose
/// singles_a/singles_b and duration_s are filled in.
AnalysisReport analyze_histogram(const CoincidenceHistogram &hist, const AnalysisOptions &opts);

} // namespace franson
