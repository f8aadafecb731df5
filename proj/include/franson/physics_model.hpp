#pragma once

#include <cstdint>
#include <vector>

namespace franson {

/// Physical configuration of the source, the two analyzers and the detectors.
/// One record drives both the Monte-Carlo simulator and the closed forms below.
struct ExperimentParams {
  double pump_power_mw = 1.0;        ///< fundamental pump power at 1560 nm
  double pair_coeff = 4.0e6;         ///< kappa, pairs s^-1 mW^-2 (R_pair = kappa P^2)
  double intrinsic_visibility = 1.0; ///< V0 in [0, 1]
  std::int64_t delta_t_ps = 800;     ///< analyzer path imbalance
  double jitter_sigma_s_ps = 50.0;
  double jitter_sigma_i_ps = 50.0;
  double eta_s = 0.048; ///< one-photon transmission x detection, uMZI split excluded
  double eta_i = 0.048;
  double dark_rate_s = 100.0; ///< counts per second
  double dark_rate_i = 100.0;
  std::int64_t dead_time_ps = 50'000;
  std::int64_t tdc_resolution_ps = 1;
  double phase_offset_rad = 0.0;
  double filter_bandwidth_hz = 100e9;
  /// Extra transmission of the long arm seen by side-peak photons; 1 keeps
  /// H_SL = H_LS. Scales the side peaks only.
  double long_arm_transmission_s = 1.0;
  double long_arm_transmission_i = 1.0;
};

/// Throws InvalidParameter when any field is outside its physical domain or the
/// imbalance is too short to separate the three coincidence peaks.
void validate(const ExperimentParams &params);

/// Quadrature sum of the two detector jitters; the ~ps biphoton width is neglected.
double effective_timing_sigma_ps(const ExperimentParams &params);

/// Single-photon coherence time 1/(pi dnu) for a filter of bandwidth dnu, in ps.
double coherence_time_ps(double delta_nu_hz);

/// kappa * P^2.
double expected_pair_rate(const ExperimentParams &params);

/// Pre-dead-time singles rate at each monitored port, darks included.
double expected_singles_rate_s(const ExperimentParams &params);
double expected_singles_rate_i(const ExperimentParams &params);

/// Measured rate of a non-paralyzable counter fed with a Poisson rate.
double dead_time_loaded_rate(double true_rate, double dead_time_s);

/// Fraction of a centred Gaussian of width sigma inside [-half_width, half_width].
double gaussian_window_fraction(double half_width, double sigma);

enum class PathCategory : std::uint8_t { SideSL, SideLS, Central };

/// Category of a pair's analyzer paths and whether each photon leaves by the
/// monitored output port.
struct JointPathOutcome {
  PathCategory category = PathCategory::Central;
  bool detect_s = false;
  bool detect_i = false;
};

/// Sampling table realizing the Franson statistics with phase-independent singles.
/// Side categories route each photon to the monitored port independently with
/// probability p_side_port. Central-category port probabilities are conditional
/// on the category and sum to one.
struct JointPathTable {
  double p_side_sl = 0.25;
  double p_side_ls = 0.25;
  double p_central = 0.5;
  double p_side_port = 0.5;
  double p_mm = 0.25; ///< both photons at monitored ports
  double p_mx = 0.25; ///< signal monitored, idler not
  double p_xm = 0.25;
  double p_xx = 0.25;

  double marginal_detect_s() const;
  double marginal_detect_i() const;
};

JointPathTable joint_path_table(double v0, double phi, double phi0);

struct HistogramComponents {
  std::vector<double> sl;
  std::vector<double> ls;
  std::vector<double> central;
  std::vector<double> accidental;
};

/// Analytic expectation of the signal-minus-idler coincidence histogram.
struct ExpectedHistogram {
  std::vector<double> bin_edges; ///< ps, size = bins + 1
  std::vector<double> expected_counts;
  HistogramComponents components;

  std::size_t bins() const { return expected_counts.size(); }
};

/// Bins cover [-lag_range, lag_range). Peak integrals are distributed over the
/// bins by exact Gaussian integration; the accidental floor uses the expected
/// (pre-dead-time) singles.
ExpectedHistogram expected_histogram(const ExperimentParams &params, double phi,
                                     double duration_s, double bin_width_ps,
                                     double lag_range_ps);

/// Expected coincidence rate inside |tau| <= window_half_width_ps around zero lag:
/// the central peak's window acceptance plus the accidentals in the window.
double expected_fringe(const ExperimentParams &params, double phi,
                       double window_half_width_ps = 100.0);

/// Half-maximum root of sinc^2(x).
inline constexpr double kSincSquaredHalfMaxRoot = 1.3915574;

/// p_max sinc^2(a (T - T_peak)) with the main-lobe FWHM equal to fwhm.
double shg_response(double temperature_c, double t_peak_c, double fwhm_c,
                    double p_max_mw);

/// Inverse-square extrapolation of a reference CAR.
double car_prediction(double power_mw, double car_ref, double power_ref_mw);

} // namespace franson
