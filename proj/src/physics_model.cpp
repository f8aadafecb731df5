#include "franson/physics_model.hpp"

#include "franson/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace franson {

namespace {

void require(bool ok, const char *what) {
  if (!ok)
    throw InvalidParameter(what);
}

// Integral of a unit-area Gaussian centred at mu over [lo, hi).
double gaussian_mass(double lo, double hi, double mu, double sigma) {
  if (sigma <= 0.0)
    return (mu >= lo && mu < hi) ? 1.0 : 0.0;
  const double s = sigma * std::numbers::sqrt2;
  return 0.5 * (std::erf((hi - mu) / s) - std::erf((lo - mu) / s));
}

} // namespace

void validate(const ExperimentParams &p) {
  require(p.intrinsic_visibility >= 0.0 && p.intrinsic_visibility <= 1.0,
          "intrinsic visibility must lie in [0, 1]");
  require(p.eta_s > 0.0 && p.eta_s <= 1.0, "eta_s must lie in (0, 1]");
  require(p.eta_i > 0.0 && p.eta_i <= 1.0, "eta_i must lie in (0, 1]");
  require(p.pump_power_mw >= 0.0 && p.pair_coeff >= 0.0, "pump power and pair coefficient must be non-negative");
  require(p.jitter_sigma_s_ps >= 0.0 && p.jitter_sigma_i_ps >= 0.0, "jitter must be non-negative");
  require(p.dark_rate_s >= 0.0 && p.dark_rate_i >= 0.0, "dark rates must be non-negative");
  require(p.dead_time_ps >= 0, "dead time must be non-negative");
  require(p.delta_t_ps > 0, "delta_t must be positive");
  require(p.tdc_resolution_ps > 0, "tdc resolution must be positive");
  require(p.filter_bandwidth_hz >= 0.0, "filter bandwidth must be non-negative");
  require(p.long_arm_transmission_s >= 0.0 && p.long_arm_transmission_s <= 1.0 &&
              p.long_arm_transmission_i >= 0.0 && p.long_arm_transmission_i <= 1.0,
          "long-arm transmissions must lie in [0, 1]");
  const double width = effective_timing_sigma_ps(p);
  if (!(static_cast<double>(p.delta_t_ps) > 10.0 * width))
    throw InvalidParameter("delta_t (" + std::to_string(p.delta_t_ps) +
                           " ps) must exceed 10x the timing width (" +
                           std::to_string(width) + " ps)");
}

double effective_timing_sigma_ps(const ExperimentParams &p) {
  return std::hypot(p.jitter_sigma_s_ps, p.jitter_sigma_i_ps);
}

double coherence_time_ps(double delta_nu_hz) {
  if (!(delta_nu_hz > 0.0))
    throw InvalidParameter("filter bandwidth must be positive");
  return 1e12 / (std::numbers::pi * delta_nu_hz);
}

double expected_pair_rate(const ExperimentParams &p) {
  validate(p);
  return p.pair_coeff * p.pump_power_mw * p.pump_power_mw;
}

double expected_singles_rate_s(const ExperimentParams &p) {
  // SL and central photons reach the monitored port w.p. 1/2; LS photons take
  // the long arm and see its extra transmission.
  const double port = (3.0 + p.long_arm_transmission_s) / 8.0;
  return expected_pair_rate(p) * p.eta_s * port + p.dark_rate_s;
}

double expected_singles_rate_i(const ExperimentParams &p) {
  const double port = (3.0 + p.long_arm_transmission_i) / 8.0;
  return expected_pair_rate(p) * p.eta_i * port + p.dark_rate_i;
}

double dead_time_loaded_rate(double true_rate, double dead_time_s) {
  return true_rate / (1.0 + true_rate * dead_time_s);
}

double gaussian_window_fraction(double half_width, double sigma) {
  if (half_width <= 0.0)
    return 0.0;
  if (sigma <= 0.0)
    return 1.0;
  return std::erf(half_width / (sigma * std::numbers::sqrt2));
}

double JointPathTable::marginal_detect_s() const {
  return (p_side_sl + p_side_ls) * p_side_port + p_central * (p_mm + p_mx);
}

double JointPathTable::marginal_detect_i() const {
  return (p_side_sl + p_side_ls) * p_side_port + p_central * (p_mm + p_xm);
}

JointPathTable joint_path_table(double v0, double phi, double phi0) {
  if (!(v0 >= 0.0 && v0 <= 1.0))
    throw InvalidParameter("visibility must lie in [0, 1]");
  const double c = v0 * std::cos(phi + phi0);
  JointPathTable t;
  t.p_mm = (1.0 + c) / 4.0;
  t.p_xx = (1.0 + c) / 4.0;
  t.p_mx = (1.0 - c) / 4.0;
  t.p_xm = (1.0 - c) / 4.0;
  return t;
}

ExpectedHistogram expected_histogram(const ExperimentParams &p, double phi,
                                     double duration_s, double bin_width_ps,
                                     double lag_range_ps) {
  validate(p);
  if (!(bin_width_ps > 0.0))
    throw InvalidParameter("bin width must be positive");
  if (!(duration_s >= 0.0))
    throw InvalidParameter("duration must be non-negative");
  const double sigma = effective_timing_sigma_ps(p);
  const double dt = static_cast<double>(p.delta_t_ps);
  if (lag_range_ps < dt + 5.0 * sigma)
    throw InvalidParameter("lag range must cover the side peaks (delta_t + 5 sigma)");
  const double span = 2.0 * lag_range_ps;
  const double nbins_real = span / bin_width_ps;
  const auto nbins = static_cast<std::size_t>(std::llround(nbins_real));
  if (std::abs(nbins_real - static_cast<double>(nbins)) > 1e-9)
    throw InvalidParameter("2 * lag_range must be a multiple of the bin width");

  const double pairs = expected_pair_rate(p) * p.eta_s * p.eta_i * duration_s;
  const double h_sl = pairs * p.long_arm_transmission_i / 16.0;
  const double h_ls = pairs * p.long_arm_transmission_s / 16.0;
  const double h_central =
      pairs / 8.0 * (1.0 + p.intrinsic_visibility * std::cos(phi + p.phase_offset_rad));
  const double acc_per_bin = expected_singles_rate_s(p) * expected_singles_rate_i(p) *
                             bin_width_ps * 1e-12 * duration_s;

  ExpectedHistogram h;
  h.bin_edges.resize(nbins + 1);
  for (std::size_t k = 0; k <= nbins; ++k)
    h.bin_edges[k] = -lag_range_ps + static_cast<double>(k) * bin_width_ps;
  auto &c = h.components;
  c.sl.resize(nbins);
  c.ls.resize(nbins);
  c.central.resize(nbins);
  c.accidental.assign(nbins, acc_per_bin);
  h.expected_counts.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double lo = h.bin_edges[k], hi = h.bin_edges[k + 1];
    // tau = t_s - t_i: signal short / idler long arrives early by delta_t.
    c.sl[k] = h_sl * gaussian_mass(lo, hi, -dt, sigma);
    c.ls[k] = h_ls * gaussian_mass(lo, hi, +dt, sigma);
    c.central[k] = h_central * gaussian_mass(lo, hi, 0.0, sigma);
    h.expected_counts[k] = c.sl[k] + c.ls[k] + c.central[k] + c.accidental[k];
  }
  return h;
}

double expected_fringe(const ExperimentParams &p, double phi, double window_half_width_ps) {
  validate(p);
  const double sigma = effective_timing_sigma_ps(p);
  const double central = expected_pair_rate(p) * p.eta_s * p.eta_i / 8.0 *
                         (1.0 + p.intrinsic_visibility * std::cos(phi + p.phase_offset_rad));
  const double accidental = expected_singles_rate_s(p) * expected_singles_rate_i(p) *
                            2.0 * window_half_width_ps * 1e-12;
  return central * gaussian_window_fraction(window_half_width_ps, sigma) + accidental;
}

double shg_response(double temperature_c, double t_peak_c, double fwhm_c, double p_max_mw) {
  if (!(fwhm_c > 0.0))
    throw InvalidParameter("FWHM must be positive");
  const double a = 2.0 * kSincSquaredHalfMaxRoot / fwhm_c;
  const double x = a * (temperature_c - t_peak_c);
  if (std::abs(x) < 1e-8)
    return p_max_mw;
  const double sinc = std::sin(x) / x;
  return p_max_mw * sinc * sinc;
}

double car_prediction(double power_mw, double car_ref, double power_ref_mw) {
  if (!(power_mw > 0.0 && car_ref > 0.0 && power_ref_mw > 0.0))
    throw InvalidParameter("CAR prediction needs positive inputs");
  const double r = power_ref_mw / power_mw;
  return car_ref * r * r;
}

} // namespace franson
