#include "franson/estimators.hpp"

#include "franson/errors.hpp"

#include <cmath>
#include <limits>

namespace franson {

namespace {

constexpr double kPsToS = 1e-12;

double sq(double v) { return v * v; }

} // namespace

double corrected_singles(double s_raw, double dark, double dead_time_s) {
  const double net = s_raw - dark;
  const double denom = 1.0 - net * dead_time_s;
  if (!(denom > 0.0))
    throw SaturationError("singles rate at or beyond the dead-time limit");
  return net / denom;
}

double accidental_rate(double s_prime_s, double s_prime_i, double tau_w_s) {
  if (s_prime_s < 0.0 || s_prime_i < 0.0 || tau_w_s < 0.0)
    throw InvalidParameter("accidental rate needs non-negative inputs");
  return s_prime_s * s_prime_i * tau_w_s;
}

double true_coincidences(double c_meas, double a_h) { return c_meas - a_h; }

std::pair<double, double> heralding_efficiencies(double c_true, double s_prime_s,
                                                 double s_prime_i) {
  if (!(s_prime_s > 0.0) || !(s_prime_i > 0.0))
    throw InvalidParameter("heralding efficiency needs positive singles rates");
  return {c_true / s_prime_i, c_true / s_prime_s};
}

double inferred_pair_rate(double c_true, double eta_s, double eta_i) {
  if (eta_s == 0.0 || eta_i == 0.0)
    throw InvalidParameter("pair rate needs non-zero heralding efficiencies");
  return c_true / (eta_s * eta_i);
}

CarValue car(double c_true, double a_h) {
  if (a_h < 0.0)
    throw InvalidParameter("accidental rate must be non-negative");
  if (a_h == 0.0)
    return {std::numeric_limits<double>::infinity(), true};
  return {c_true / a_h, false};
}

double visibility_raw(double c_max, double c_min) {
  if (c_min < 0.0 || c_max < c_min)
    throw InvalidParameter("visibility needs c_max >= c_min >= 0");
  if (c_max + c_min == 0.0)
    throw UndefinedVisibility("visibility undefined for zero counts");
  return (c_max - c_min) / (c_max + c_min);
}

double visibility_net(double c_max, double c_min, double a_window) {
  if (!(c_max > a_window))
    throw UndefinedVisibility("maximum does not exceed the accidental level");
  return visibility_raw(c_max - a_window, std::max(c_min - a_window, 0.0));
}

double visibility_raw_sigma(double c_max, double c_min) {
  const double s = c_max + c_min;
  if (!(s > 0.0))
    return 0.0;
  // dV/dmax = 2 min / s^2, dV/dmin = -2 max / s^2, Poisson variances.
  return 2.0 / (s * s) * std::sqrt(sq(c_min) * c_max + sq(c_max) * c_min);
}

AnalysisOptions analysis_options_for(const ExperimentParams &p) {
  AnalysisOptions o;
  o.dark_rate_s = p.dark_rate_s;
  o.dark_rate_i = p.dark_rate_i;
  o.dead_time_s = static_cast<double>(p.dead_time_ps) * kPsToS;
  o.delta_t_ps = p.delta_t_ps;
  o.timing_sigma_ps = effective_timing_sigma_ps(p);
  return o;
}

AnalysisReport analyze_histogram(const CoincidenceHistogram &hist, const AnalysisOptions &o) {
  if (!(hist.duration_s > 0.0))
    throw InvalidParameter("histogram duration must be positive");
  const double T = hist.duration_s;
  AnalysisReport r;
  r.duration_s = T;

  const auto n_s = static_cast<double>(hist.singles_a);
  const auto n_i = static_cast<double>(hist.singles_b);
  r.s_raw_s = {n_s / T, std::sqrt(n_s) / T};
  r.s_raw_i = {n_i / T, std::sqrt(n_i) / T};

  auto correct = [&](const Measured &raw, double dark) {
    const double v = corrected_singles(raw.value, dark, o.dead_time_s);
    const double slope = 1.0 / sq(1.0 - (raw.value - dark) * o.dead_time_s);
    return Measured{v, slope * raw.sigma};
  };
  r.s_prime_s = correct(r.s_raw_s, o.dark_rate_s);
  r.s_prime_i = correct(r.s_raw_i, o.dark_rate_i);

  if (o.correct_coincidence_dead_time) {
    r.live_fraction_s = 1.0 - r.s_raw_s.value * o.dead_time_s;
    r.live_fraction_i = 1.0 - r.s_raw_i.value * o.dead_time_s;
    if (!(r.live_fraction_s > 0.0 && r.live_fraction_i > 0.0))
      throw SaturationError("detector live fraction is not positive");
  }
  const double live = r.live_fraction_s * r.live_fraction_i;

  const double sps = r.s_prime_s.value, spi = r.s_prime_i.value;
  auto accidentals = [&](double width_s) {
    const double v = accidental_rate(std::max(sps, 0.0), std::max(spi, 0.0), width_s);
    const double s = width_s * std::hypot(spi * r.s_prime_s.sigma, sps * r.s_prime_i.sigma);
    return Measured{v, s};
  };

  const double tau_w = 2.0 * static_cast<double>(o.window_half_width_ps) * kPsToS;
  r.a_h = accidentals(tau_w);
  const auto n_w = static_cast<double>(integrate_window(hist, 0, o.window_half_width_ps));
  r.c_meas = {n_w / T / live, std::sqrt(n_w) / T / live};
  r.c_true = {true_coincidences(r.c_meas.value, r.a_h.value), std::hypot(r.c_meas.sigma, r.a_h.sigma)};
  r.c_true_negative = r.c_true.value < 0.0;

  const double ct = r.c_true.value;
  if (sps > 0.0 && spi > 0.0) {
    const auto [es, ei] = heralding_efficiencies(ct, sps, spi);
    r.eta_s = {es, std::hypot(r.c_true.sigma / spi, ct * r.s_prime_i.sigma / sq(spi))};
    r.eta_i = {ei, std::hypot(r.c_true.sigma / sps, ct * r.s_prime_s.sigma / sq(sps))};
    if (es != 0.0 && ei != 0.0) {
      // C_true / (eta_s eta_i) == S'_s S'_i / C_true; the latter has independent inputs.
      const double rp = inferred_pair_rate(ct, es, ei);
      const double rel = std::sqrt(sq(r.s_prime_s.sigma / sps) + sq(r.s_prime_i.sigma / spi) +
                                   sq(r.c_true.sigma / ct));
      r.r_pair = {rp, std::abs(rp) * rel};
    }
  }
  const CarValue cv = car(ct, r.a_h.value);
  r.car_infinite = cv.infinite;
  if (!cv.infinite) {
    const double rel = std::hypot(r.c_true.sigma / (ct == 0.0 ? 1.0 : ct), r.a_h.sigma / r.a_h.value);
    r.car = {cv.value, std::abs(ct == 0.0 ? r.c_true.sigma / r.a_h.value : cv.value * rel)};
  } else {
    r.car = {cv.value, 0.0};
  }

  r.central_window_acceptance =
      gaussian_window_fraction(static_cast<double>(o.window_half_width_ps), o.timing_sigma_ps);
  r.side_window_acceptance =
      gaussian_window_fraction(static_cast<double>(o.side_half_width_ps), o.timing_sigma_ps);

  // Side peaks at +-delta_t; each photon of a side-category pair reaches its
  // monitored port w.p. 1/2 and half the pairs are side pairs, so the two side
  // peaks together carry eta_s eta_i / 8 of the pairs against singles of eta / 2.
  const auto n_side =
      static_cast<double>(integrate_window(hist, -o.delta_t_ps, o.side_half_width_ps) +
                          integrate_window(hist, o.delta_t_ps, o.side_half_width_ps));
  const Measured a_side = accidentals(4.0 * static_cast<double>(o.side_half_width_ps) * kPsToS);
  r.c_side_true = {n_side / T / live - a_side.value,
                   std::hypot(std::sqrt(n_side) / T / live, a_side.sigma)};
  const double cs = r.c_side_true.value / r.side_window_acceptance;
  const double cs_sigma = r.c_side_true.sigma / r.side_window_acceptance;
  if (sps > 0.0 && spi > 0.0) {
    r.eta_s_side = {4.0 * cs / spi, 4.0 * std::hypot(cs_sigma / spi, cs * r.s_prime_i.sigma / sq(spi))};
    r.eta_i_side = {4.0 * cs / sps, 4.0 * std::hypot(cs_sigma / sps, cs * r.s_prime_s.sigma / sq(sps))};
    if (cs != 0.0) {
      const double rp = sps * spi / (2.0 * cs);
      const double rel = std::sqrt(sq(r.s_prime_s.sigma / sps) + sq(r.s_prime_i.sigma / spi) +
                                   sq(cs_sigma / cs));
      r.r_pair_side = {rp, std::abs(rp) * rel};
    }
  }
  return r;
}

} // namespace franson
