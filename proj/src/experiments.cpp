#include "franson/experiments.hpp"

#include "franson/errors.hpp"
#include "franson/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace franson {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs job(i) for i in [0, n) on up to `workers` threads. Every job writes
/// only its own slot, so results do not depend on scheduling.
template <typename Job> void parallel_for(std::size_t n, unsigned workers, Job &&job) {
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true))
            failure = std::current_exception();
        }
      }
    });
  for (auto &th : pool)
    th.join();
  if (failure)
    std::rethrow_exception(failure);
}

AnalysisOptions options_for(const RunConfig &c) {
  AnalysisOptions o = analysis_options_for(c.params);
  o.window_half_width_ps = c.window_half_width_ps;
  o.side_half_width_ps = c.side_half_width_ps;
  o.correct_coincidence_dead_time = c.correct_coincidence_dead_time;
  return o;
}

FringeScan fringe_from(const std::vector<Acquisition> &acqs) {
  FringeScan scan;
  for (const auto &a : acqs)
    scan.push_back({a.phase_rad, static_cast<double>(a.central_counts), a.window_accidentals,
                    a.report.duration_s});
  return scan;
}

} // namespace

Acquisition analyze_streams(const TimeTagStream &signal, const TimeTagStream &idler,
                            const RunConfig &config, double phase_rad) {
  Acquisition acq;
  acq.phase_rad = phase_rad;
  acq.histogram = build_histogram(signal, idler, -config.lag_range_ps, config.lag_range_ps,
                                  config.bin_width_ps, config.duration_s);
  acq.report = analyze_histogram(acq.histogram, options_for(config));
  acq.central_counts = integrate_window(acq.histogram, 0, config.window_half_width_ps);
  const std::int64_t dt = config.params.delta_t_ps;
  acq.side_sl_counts = integrate_window(acq.histogram, -dt, config.side_half_width_ps);
  acq.side_ls_counts = integrate_window(acq.histogram, dt, config.side_half_width_ps);

  const double excl = 5.0 * effective_timing_sigma_ps(config.params);
  const LagWindow peaks[] = {{0.0, excl},
                             {static_cast<double>(-dt), excl},
                             {static_cast<double>(dt), excl}};
  acq.baseline = estimate_baseline(acq.histogram, peaks);
  acq.window_accidentals = acq.baseline.mean_per_bin *
                           static_cast<double>(2 * config.window_half_width_ps) /
                           static_cast<double>(config.bin_width_ps);
  return acq;
}

Acquisition acquire(const RunConfig &config, double phase_rad, std::uint64_t seed) {
  const SimulatedTags tags = simulate(config.params, phase_rad, config.duration_s, seed);
  return analyze_streams(tags.signal, tags.idler, config, phase_rad);
}

double VisibilitySummary::v_fit() const { return fit ? fit->value("v") : kNaN; }
double VisibilitySummary::v_fit_sigma() const { return fit ? fit->error("v") : kNaN; }

VisibilitySummary summarize_fringe(const FringeScan &scan, bool fit_alpha) {
  if (scan.empty())
    throw InvalidParameter("empty fringe scan");
  VisibilitySummary v;
  auto [lo, hi] = std::minmax_element(scan.begin(), scan.end(),
                                      [](const auto &a, const auto &b) { return a.counts < b.counts; });
  double acc = 0.0;
  for (const auto &p : scan)
    acc += p.accidentals;
  acc /= static_cast<double>(scan.size());
  if (hi->counts + lo->counts > 0.0) {
    v.v_raw = visibility_raw(hi->counts, lo->counts);
    v.v_raw_sigma = visibility_raw_sigma(hi->counts, lo->counts);
  } else {
    v.v_raw = v.v_raw_sigma = kNaN;
  }
  v.v_net = hi->counts > acc ? visibility_net(hi->counts, lo->counts, acc) : kNaN;

  if (scan.size() >= 8) {
    std::vector<double> x, y, e;
    for (const auto &p : scan) {
      x.push_back(p.phase_rad);
      y.push_back(p.counts);
      e.push_back(std::sqrt(std::max(p.counts, 1.0)));
    }
    v.fit = fit_fringe(x, y, e, FringeFitOptions{fit_alpha, 1.0});
  }
  return v;
}

PhaseScanResult run_phase_scan(const RunConfig &config,
                               const std::optional<std::filesystem::path> &out_dir) {
  validate(config);
  PhaseScanResult res;
  res.points.resize(config.phases_rad.size());
  parallel_for(res.points.size(), config.workers, [&](std::size_t i) {
    res.points[i] =
        acquire(config, config.phases_rad[i], derive_seed(config.seed, Stage::Scan, 0, i));
  });
  res.scan = fringe_from(res.points);
  if (out_dir)
    write_text(*out_dir / "fringe.csv", fringe_csv(res.scan));
  res.visibility = summarize_fringe(res.scan, config.fit_alpha);
  return res;
}

PowerSweepResult run_power_sweep(const RunConfig &config,
                                 const std::optional<std::filesystem::path> &out_dir) {
  validate(config);
  const std::size_t np = config.powers_mw.size();
  const std::size_t nphi = config.sweep_phases_rad.size();
  std::vector<Acquisition> acqs(np * nphi);
  parallel_for(acqs.size(), config.workers, [&](std::size_t job) {
    const std::size_t ip = job / nphi, iphi = job % nphi;
    RunConfig c = config;
    c.params.pump_power_mw = config.powers_mw[ip];
    acqs[job] = acquire(c, config.sweep_phases_rad[iphi],
                        derive_seed(config.seed, Stage::Scan, ip + 1, iphi));
  });

  PowerSweepResult res;
  std::vector<double> p, rp, cr;
  for (std::size_t ip = 0; ip < np; ++ip) {
    SweepPoint pt;
    pt.power_mw = config.powers_mw[ip];
    pt.phases.assign(acqs.begin() + static_cast<std::ptrdiff_t>(ip * nphi),
                     acqs.begin() + static_cast<std::ptrdiff_t>((ip + 1) * nphi));
    pt.report = pt.phases.front().report;
    pt.visibility = summarize_fringe(fringe_from(pt.phases), config.fit_alpha);
    if (pt.report.r_pair.value > 0.0 && !pt.report.car_infinite && pt.report.car.value > 0.0) {
      p.push_back(pt.power_mw);
      rp.push_back(pt.report.r_pair.value);
      cr.push_back(pt.report.car.value);
    }
    res.points.push_back(std::move(pt));
  }
  if (out_dir) {
    write_text(*out_dir / "sweep.csv", sweep_csv(res));
    write_text(*out_dir / "sweep_side.csv", sweep_side_csv(res));
  }
  if (p.size() < 2)
    throw InitializationError("power sweep: fewer than two powers with positive pair rate and CAR");
  res.pair_rate_fit = fit_powerlaw(p, rp);
  res.car_fit = fit_powerlaw(p, cr);
  return res;
}

ShgScanResult run_shg_scan(const RunConfig &config,
                           const std::optional<std::filesystem::path> &out_dir) {
  validate(config);
  ShgScanResult res;
  res.temperatures_c = config.temperatures_c;
  Engine rng(derive_seed(config.seed, Stage::Scan, 0xfeed, 0));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double t : res.temperatures_c) {
    const double p = shg_response(t, config.shg.t_peak_c, config.shg.fwhm_c, config.shg.p_max_mw);
    res.powers_mw.push_back(p * (1.0 + config.shg.noise_rel * noise(rng)));
  }
  if (out_dir)
    write_text(*out_dir / "shg.csv", shg_csv(res));
  res.fit = fit_shg(res.temperatures_c, res.powers_mw);
  return res;
}

std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string histogram_csv(const CoincidenceHistogram &hist) {
  std::string s = "lag_ps,counts\n";
  for (std::size_t k = 0; k < hist.bins(); ++k)
    s += std::to_string(hist.bin_lower(k)) + "," + std::to_string(hist.counts[k]) + "\n";
  return s;
}

std::string fringe_csv(const FringeScan &scan) {
  std::string s = "phase_rad,counts,accidentals,duration_s\n";
  for (const auto &p : scan)
    s += format_number(p.phase_rad) + "," + format_number(p.counts) + "," +
         format_number(p.accidentals) + "," + format_number(p.duration_s) + "\n";
  return s;
}

std::string sweep_csv(const PowerSweepResult &sweep) {
  std::string s =
      "power_mw,s_prime_s,s_prime_i,a_h,c_true,eta_s,eta_i,r_pair,car,v_raw,v_net,v_fit\n";
  for (const auto &pt : sweep.points) {
    const AnalysisReport &r = pt.report;
    const double car = r.car_infinite ? std::numeric_limits<double>::infinity() : r.car.value;
    for (double v : {pt.power_mw, r.s_prime_s.value, r.s_prime_i.value, r.a_h.value,
                     r.c_true.value, r.eta_s.value, r.eta_i.value, r.r_pair.value, car,
                     pt.visibility.v_raw, pt.visibility.v_net})
      s += format_number(v) + ",";
    s += format_number(pt.visibility.v_fit()) + "\n";
  }
  return s;
}

std::string sweep_side_csv(const PowerSweepResult &sweep) {
  std::string s = "power_mw,c_side_true,eta_s_side,eta_i_side,r_pair_side\n";
  for (const auto &pt : sweep.points) {
    const AnalysisReport &r = pt.report;
    s += format_number(pt.power_mw) + "," + format_number(r.c_side_true.value) + "," +
         format_number(r.eta_s_side.value) + "," + format_number(r.eta_i_side.value) + "," +
         format_number(r.r_pair_side.value) + "\n";
  }
  return s;
}

std::string shg_csv(const ShgScanResult &shg) {
  std::string s = "temperature_c,power_mw\n";
  for (std::size_t i = 0; i < shg.temperatures_c.size(); ++i)
    s += format_number(shg.temperatures_c[i]) + "," + format_number(shg.powers_mw[i]) + "\n";
  return s;
}

namespace {

std::vector<std::pair<std::string, Measured>> report_fields(const AnalysisReport &r) {
  return {{"s_raw_s", r.s_raw_s},         {"s_raw_i", r.s_raw_i},
          {"s_prime_s", r.s_prime_s},     {"s_prime_i", r.s_prime_i},
          {"a_h", r.a_h},                 {"c_meas", r.c_meas},
          {"c_true", r.c_true},           {"eta_s", r.eta_s},
          {"eta_i", r.eta_i},             {"r_pair", r.r_pair},
          {"car", r.car},                 {"c_side_true", r.c_side_true},
          {"eta_s_side", r.eta_s_side},   {"eta_i_side", r.eta_i_side},
          {"r_pair_side", r.r_pair_side}};
}

} // namespace

std::string report_key_value(const AnalysisReport &r) {
  std::string s = "duration_s = " + format_number(r.duration_s) + "\n";
  for (const auto &[k, m] : report_fields(r)) {
    if (k == "car" && r.car_infinite) {
      s += "car = inf\n";
      continue;
    }
    s += k + " = " + format_number(m.value) + " +- " + format_number(m.sigma) + "\n";
  }
  s += "c_true_negative = " + std::string(r.c_true_negative ? "true" : "false") + "\n";
  s += "live_fraction_s = " + format_number(r.live_fraction_s) + "\n";
  s += "live_fraction_i = " + format_number(r.live_fraction_i) + "\n";
  return s;
}

std::string report_csv_header() {
  std::string s = "duration_s";
  for (const auto &[k, m] : report_fields(AnalysisReport{}))
    s += "," + k + "," + k + "_sigma";
  return s + "\n";
}

std::string report_csv_row(const AnalysisReport &r) {
  std::string s = format_number(r.duration_s);
  for (const auto &[k, m] : report_fields(r)) {
    const double v = (k == "car" && r.car_infinite) ? std::numeric_limits<double>::infinity()
                                                    : m.value;
    s += "," + format_number(v) + "," + format_number(m.sigma);
  }
  return s + "\n";
}

std::string fit_key_value(const FitResult &fit, const std::string &prefix) {
  std::string s;
  for (std::size_t k = 0; k < fit.names.size(); ++k)
    s += prefix + fit.names[k] + " = " + format_number(fit.values[static_cast<Eigen::Index>(k)]) +
         " +- " + format_number(fit.error(fit.names[k])) + "\n";
  s += prefix + "reduced_chi2 = " + format_number(fit.reduced_chi2()) + "\n";
  s += prefix + "converged = " + std::string(fit.converged ? "true" : "false") + "\n";
  return s;
}

std::string visibility_key_value(const VisibilitySummary &v) {
  std::string s = "v_raw = " + format_number(v.v_raw) + " +- " + format_number(v.v_raw_sigma) + "\n";
  s += "v_net = " + format_number(v.v_net) + "\n";
  s += "v_fit = " + format_number(v.v_fit()) + " +- " + format_number(v.v_fit_sigma()) + "\n";
  if (v.fit)
    s += fit_key_value(*v.fit, "fringe_");
  return s;
}

void write_text(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out)
    throw std::runtime_error("write failed for " + path.string());
}

} // namespace franson
