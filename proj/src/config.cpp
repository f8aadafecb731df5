#include "franson/config.hpp"

#include "franson/errors.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>

namespace franson {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::Simulate:
    return "simulate";
  case ExperimentKind::Analyze:
    return "analyze";
  case ExperimentKind::PhaseScan:
    return "phase_scan";
  case ExperimentKind::PowerSweep:
    return "power_sweep";
  case ExperimentKind::ShgScan:
    return "shg_scan";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string &name) {
  for (auto k : {ExperimentKind::Simulate, ExperimentKind::Analyze, ExperimentKind::PhaseScan,
                 ExperimentKind::PowerSweep, ExperimentKind::ShgScan}) {
    std::string alt = to_string(k);
    std::replace(alt.begin(), alt.end(), '_', '-');
    if (name == to_string(k) || name == alt)
      return k;
  }
  throw InvalidParameter("unknown experiment kind '" + name + "'");
}

std::vector<double> uniform_phase_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return g;
}

void validate(const RunConfig &c) {
  validate(c.params);
  if (!(c.duration_s > 0.0))
    throw InvalidParameter("duration_s must be positive");
  if (c.bin_width_ps <= 0 || c.window_half_width_ps <= 0 || c.side_half_width_ps <= 0)
    throw InvalidParameter("bin width and window half widths must be positive");
  if ((2 * c.lag_range_ps) % c.bin_width_ps != 0)
    throw InvalidParameter("2 x lag_range_ps must be a multiple of bin_width_ps");
  if (c.lag_range_ps < c.params.delta_t_ps + c.side_half_width_ps)
    throw InvalidParameter("lag range must contain the side-peak windows");
  auto strictly_increasing = [](const std::vector<double> &v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  switch (c.kind) {
  case ExperimentKind::PhaseScan:
    if (c.phases_rad.empty() || !strictly_increasing(c.phases_rad))
      throw InvalidParameter("phase scan needs a non-empty, strictly increasing phases_rad");
    if (c.phases_rad.back() - c.phases_rad.front() <
        2.0 * std::numbers::pi * (1.0 - 1.0 / static_cast<double>(c.phases_rad.size())) - 1e-9)
      throw InvalidParameter("phase grid must span one full period");
    break;
  case ExperimentKind::PowerSweep:
    if (c.powers_mw.size() < 4)
      throw InvalidParameter("power sweep needs at least 4 powers");
    if (c.sweep_phases_rad.empty())
      throw InvalidParameter("power sweep needs at least one phase per power");
    break;
  case ExperimentKind::ShgScan:
    if (c.temperatures_c.empty() || !strictly_increasing(c.temperatures_c))
      throw InvalidParameter("SHG scan needs a non-empty, strictly increasing temperatures_c");
    if (c.temperatures_c.back() - c.temperatures_c.front() < 2.0 * c.shg.fwhm_c)
      throw InvalidParameter("temperature grid must span at least 2 x FWHM");
    break;
  default:
    break;
  }
}

RunConfig paper_preset(ExperimentKind kind) {
  RunConfig c;
  c.kind = kind;
  ExperimentParams &p = c.params;
  p.pump_power_mw = 1.7;
  p.pair_coeff = 4.0e6;
  p.intrinsic_visibility = 0.971;
  p.delta_t_ps = 800;
  p.jitter_sigma_s_ps = 50.0;
  p.jitter_sigma_i_ps = 50.0;
  p.eta_s = 0.048;
  p.eta_i = 0.048;
  p.dark_rate_s = 100.0;
  p.dark_rate_i = 100.0;
  p.dead_time_ps = 50'000;
  p.tdc_resolution_ps = 1;
  p.phase_offset_rad = 0.0;
  p.filter_bandwidth_hz = 100e9;
  c.phases_rad = uniform_phase_grid(16);
  c.powers_mw = {1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
  c.sweep_phases_rad = {0.0, std::numbers::pi};
  for (double t = -6.0; t <= 6.0 + 1e-9; t += 0.25)
    c.temperatures_c.push_back(c.shg.t_peak_c + t);
  c.duration_s = 30.0;
  return c;
}

namespace {

template <typename T> void take(const json &j, const char *key, T &dst) {
  if (j.contains(key))
    dst = j.at(key).get<T>();
}

const std::set<std::string> &known_keys() {
  static const std::set<std::string> keys = {
      "experiment", "seed", "duration_s", "output_dir", "workers", "phase_rad", "phases_rad",
      "phase_points", "powers_mw", "temperatures_c", "sweep_phases_rad", "bin_width_ps",
      "lag_range_ps", "window_half_width_ps", "side_half_width_ps",
      "correct_coincidence_dead_time", "fit_alpha", "pump_power_mw", "pair_coeff_per_s_per_mw2",
      "intrinsic_visibility", "delta_t_ps", "jitter_sigma_s_ps", "jitter_sigma_i_ps", "eta_s",
      "eta_i", "dark_rate_s_hz", "dark_rate_i_hz", "dead_time_ps", "tdc_resolution_ps",
      "phase_offset_rad", "filter_bandwidth_hz", "long_arm_transmission_s",
      "long_arm_transmission_i", "shg_t_peak_c", "shg_fwhm_c", "shg_p_max_mw", "shg_noise_rel"};
  return keys;
}

} // namespace

RunConfig config_from_json(const json &j, RunConfig c) {
  if (!j.is_object())
    throw InvalidParameter("config must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    if (!known_keys().count(key))
      throw InvalidParameter("unknown config key '" + key + "'");
    if (value.is_object())
      throw InvalidParameter("config must be flat; key '" + key + "' holds an object");
  }
  try {
    if (j.contains("experiment"))
      c.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    take(j, "seed", c.seed);
    take(j, "duration_s", c.duration_s);
    if (j.contains("output_dir"))
      c.output_dir = j.at("output_dir").get<std::string>();
    take(j, "workers", c.workers);
    take(j, "phase_rad", c.phase_rad);
    if (j.contains("phase_points"))
      c.phases_rad = uniform_phase_grid(j.at("phase_points").get<std::size_t>());
    take(j, "phases_rad", c.phases_rad);
    take(j, "powers_mw", c.powers_mw);
    take(j, "temperatures_c", c.temperatures_c);
    take(j, "sweep_phases_rad", c.sweep_phases_rad);
    take(j, "bin_width_ps", c.bin_width_ps);
    take(j, "lag_range_ps", c.lag_range_ps);
    take(j, "window_half_width_ps", c.window_half_width_ps);
    take(j, "side_half_width_ps", c.side_half_width_ps);
    take(j, "correct_coincidence_dead_time", c.correct_coincidence_dead_time);
    take(j, "fit_alpha", c.fit_alpha);

    ExperimentParams &p = c.params;
    take(j, "pump_power_mw", p.pump_power_mw);
    take(j, "pair_coeff_per_s_per_mw2", p.pair_coeff);
    take(j, "intrinsic_visibility", p.intrinsic_visibility);
    take(j, "delta_t_ps", p.delta_t_ps);
    take(j, "jitter_sigma_s_ps", p.jitter_sigma_s_ps);
    take(j, "jitter_sigma_i_ps", p.jitter_sigma_i_ps);
    take(j, "eta_s", p.eta_s);
    take(j, "eta_i", p.eta_i);
    take(j, "dark_rate_s_hz", p.dark_rate_s);
    take(j, "dark_rate_i_hz", p.dark_rate_i);
    take(j, "dead_time_ps", p.dead_time_ps);
    take(j, "tdc_resolution_ps", p.tdc_resolution_ps);
    take(j, "phase_offset_rad", p.phase_offset_rad);
    take(j, "filter_bandwidth_hz", p.filter_bandwidth_hz);
    take(j, "long_arm_transmission_s", p.long_arm_transmission_s);
    take(j, "long_arm_transmission_i", p.long_arm_transmission_i);

    take(j, "shg_t_peak_c", c.shg.t_peak_c);
    take(j, "shg_fwhm_c", c.shg.fwhm_c);
    take(j, "shg_p_max_mw", c.shg.p_max_mw);
    take(j, "shg_noise_rel", c.shg.noise_rel);
  } catch (const json::exception &e) {
    throw InvalidParameter(std::string("bad config value: ") + e.what());
  }
  return c;
}

json config_to_json(const RunConfig &c) {
  const ExperimentParams &p = c.params;
  return json{
      {"experiment", to_string(c.kind)},
      {"seed", c.seed},
      {"duration_s", c.duration_s},
      {"output_dir", c.output_dir.string()},
      {"workers", c.workers},
      {"phase_rad", c.phase_rad},
      {"phases_rad", c.phases_rad},
      {"powers_mw", c.powers_mw},
      {"temperatures_c", c.temperatures_c},
      {"sweep_phases_rad", c.sweep_phases_rad},
      {"bin_width_ps", c.bin_width_ps},
      {"lag_range_ps", c.lag_range_ps},
      {"window_half_width_ps", c.window_half_width_ps},
      {"side_half_width_ps", c.side_half_width_ps},
      {"correct_coincidence_dead_time", c.correct_coincidence_dead_time},
      {"fit_alpha", c.fit_alpha},
      {"pump_power_mw", p.pump_power_mw},
      {"pair_coeff_per_s_per_mw2", p.pair_coeff},
      {"intrinsic_visibility", p.intrinsic_visibility},
      {"delta_t_ps", p.delta_t_ps},
      {"jitter_sigma_s_ps", p.jitter_sigma_s_ps},
      {"jitter_sigma_i_ps", p.jitter_sigma_i_ps},
      {"eta_s", p.eta_s},
      {"eta_i", p.eta_i},
      {"dark_rate_s_hz", p.dark_rate_s},
      {"dark_rate_i_hz", p.dark_rate_i},
      {"dead_time_ps", p.dead_time_ps},
      {"tdc_resolution_ps", p.tdc_resolution_ps},
      {"phase_offset_rad", p.phase_offset_rad},
      {"filter_bandwidth_hz", p.filter_bandwidth_hz},
      {"long_arm_transmission_s", p.long_arm_transmission_s},
      {"long_arm_transmission_i", p.long_arm_transmission_i},
      {"shg_t_peak_c", c.shg.t_peak_c},
      {"shg_fwhm_c", c.shg.fwhm_c},
      {"shg_p_max_mw", c.shg.p_max_mw},
      {"shg_noise_rel", c.shg.noise_rel},
  };
}

RunConfig load_config(const std::filesystem::path &path, RunConfig base) {
  std::ifstream in(path);
  if (!in)
    throw InvalidParameter("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw InvalidParameter("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

} // namespace franson
