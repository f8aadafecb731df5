#include "franson/timetag_sim.hpp"

#include "franson/errors.hpp"
#include "franson/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <thread>

namespace franson {

namespace {

constexpr double kPsPerSecond = 1e12;
constexpr double kChunkPs = 1e12;
constexpr double kMaxEvents = 4294967296.0; // 2^32

void check_capacity(double expected, const char *what) {
  if (expected > kMaxEvents)
    throw CapacityError(std::string(what) + ": expected event count exceeds 2^32");
}

// Poisson arrival times with the given rate (per ps) on [t0, t1).
template <typename Fn>
void poisson_arrivals(Engine &rng, double rate_per_ps, double t0, double t1, Fn &&on_event) {
  if (!(rate_per_ps > 0.0))
    return;
  std::exponential_distribution<double> gap(rate_per_ps);
  for (double t = t0 + gap(rng); t < t1; t += gap(rng))
    on_event(t);
}

std::vector<double> dark_train(double rate, double t0_ps, double t1_ps, std::uint64_t seed) {
  std::vector<double> out;
  if (!(rate > 0.0))
    return out;
  out.reserve(static_cast<std::size_t>(rate * (t1_ps - t0_ps) / kPsPerSecond * 1.1) + 16);
  Engine rng(seed);
  poisson_arrivals(rng, rate / kPsPerSecond, t0_ps, t1_ps, [&](double t) { out.push_back(t); });
  return out;
}

// Outcome of a pair with at least one detected photon.
struct DetectionPattern {
  double weight;
  bool det_s, det_i;
  bool long_s, long_i;
};

// Every way a pair can yield one or two detections, weighted by its probability.
std::array<DetectionPattern, 12> detection_patterns(const ExperimentParams &p, double phi) {
  const JointPathTable t = joint_path_table(p.intrinsic_visibility, phi, p.phase_offset_rad);
  std::array<DetectionPattern, 12> out{};
  std::size_t n = 0;
  auto side = [&](double weight, double ps, double pi, bool long_s, bool long_i) {
    out[n++] = {weight * ps * pi, true, true, long_s, long_i};
    out[n++] = {weight * ps * (1.0 - pi), true, false, long_s, long_i};
    out[n++] = {weight * (1.0 - ps) * pi, false, true, long_s, long_i};
  };
  side(t.p_side_sl, t.p_side_port * p.eta_s, t.p_side_port * p.eta_i * p.long_arm_transmission_i,
       false, true);
  side(t.p_side_ls, t.p_side_port * p.eta_s * p.long_arm_transmission_s, t.p_side_port * p.eta_i,
       true, false);
  for (bool arm_long : {false, true}) {
    const double w = t.p_central * 0.5;
    out[n++] = {w * t.p_mm * p.eta_s * p.eta_i, true, true, arm_long, arm_long};
    out[n++] = {w * (t.p_mm * p.eta_s * (1.0 - p.eta_i) + t.p_mx * p.eta_s), true, false,
                arm_long, arm_long};
    out[n++] = {w * (t.p_mm * (1.0 - p.eta_s) * p.eta_i + t.p_xm * p.eta_i), false, true,
                arm_long, arm_long};
  }
  return out;
}

// Arrival-ordered photons are displaced by at most delta_t plus a few jitter
// widths, so the input is almost sorted: insertion sort is linear here. Falls
// back to std::sort once the shifting work exceeds a few moves per element.
void sort_nearly_sorted(std::vector<double> &v) {
  std::size_t budget = 8 * v.size() + 1024;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double x = v[i];
    std::size_t j = i;
    while (j > 0 && v[j - 1] > x) {
      v[j] = v[j - 1];
      --j;
      if (--budget == 0) {
        v[j] = x;
        std::sort(v.begin(), v.end());
        return;
      }
    }
    v[j] = x;
  }
}

std::vector<double> merge_sorted(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  return out;
}

} // namespace

std::vector<EmissionEvent> generate_emissions(const ExperimentParams &params, double phi,
                                              double duration_s, std::uint64_t rng_seed) {
  validate(params);
  if (!(duration_s > 0.0))
    throw InvalidParameter("duration must be positive");
  const double rate = expected_pair_rate(params);
  check_capacity(rate * duration_s, "generate_emissions");
  const JointPathTable table =
      joint_path_table(params.intrinsic_visibility, phi, params.phase_offset_rad);

  Engine rng(derive_seed(rng_seed, Stage::Emission));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<EmissionEvent> events;
  events.reserve(static_cast<std::size_t>(rate * duration_s * 1.01) + 16);
  const double central_cut[3] = {table.p_mm, table.p_mm + table.p_mx,
                                 table.p_mm + table.p_mx + table.p_xm};
  poisson_arrivals(rng, rate / kPsPerSecond, 0.0, duration_s * kPsPerSecond, [&](double t) {
    EmissionEvent e{t, {}};
    const double u = uni(rng);
    if (u < table.p_side_sl + table.p_side_ls) {
      e.outcome.category = u < table.p_side_sl ? PathCategory::SideSL : PathCategory::SideLS;
      e.outcome.detect_s = uni(rng) < table.p_side_port;
      e.outcome.detect_i = uni(rng) < table.p_side_port;
    } else {
      e.outcome.category = PathCategory::Central;
      const double v = uni(rng);
      const bool mm = v < central_cut[0];
      const bool mx = !mm && v < central_cut[1];
      const bool xm = !mm && !mx && v < central_cut[2];
      e.outcome.detect_s = mm || mx;
      e.outcome.detect_i = mm || xm;
    }
    events.push_back(e);
  });
  return events;
}

RawDetections route_and_detect(std::span<const EmissionEvent> events,
                               const ExperimentParams &params, double /*phi*/,
                               std::uint64_t rng_seed) {
  validate(params);
  Engine rng(derive_seed(rng_seed, Stage::Routing));
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const double dt = static_cast<double>(params.delta_t_ps);

  RawDetections out;
  for (const EmissionEvent &e : events) {
    bool long_s = false, long_i = false;
    switch (e.outcome.category) {
    case PathCategory::SideSL:
      long_i = true;
      break;
    case PathCategory::SideLS:
      long_s = true;
      break;
    case PathCategory::Central:
      long_s = long_i = coin(rng);
      break;
    }
    const bool side = e.outcome.category != PathCategory::Central;
    const double ts_eff = params.eta_s * (side && long_s ? params.long_arm_transmission_s : 1.0);
    const double ti_eff = params.eta_i * (side && long_i ? params.long_arm_transmission_i : 1.0);
    if (e.outcome.detect_s && uni(rng) < ts_eff)
      out.signal_ps.push_back(e.t_emit_ps + (long_s ? dt : 0.0) +
                              params.jitter_sigma_s_ps * jitter(rng));
    if (e.outcome.detect_i && uni(rng) < ti_eff)
      out.idler_ps.push_back(e.t_emit_ps + (long_i ? dt : 0.0) +
                             params.jitter_sigma_i_ps * jitter(rng));
  }
  std::sort(out.signal_ps.begin(), out.signal_ps.end());
  std::sort(out.idler_ps.begin(), out.idler_ps.end());
  return out;
}

std::vector<double> add_dark_counts(std::span<const double> times, double dark_rate,
                                    double duration_s, std::uint64_t rng_seed) {
  if (!(dark_rate > 0.0))
    return {times.begin(), times.end()};
  check_capacity(dark_rate * duration_s, "add_dark_counts");
  const auto darks = dark_train(dark_rate, 0.0, duration_s * kPsPerSecond, rng_seed);
  return merge_sorted(times, darks);
}

std::vector<double> apply_dead_time(std::span<const double> times, double dead_time_ps) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    if (out.empty() || t - out.back() >= dead_time_ps)
      out.push_back(t);
  }
  return out;
}

std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> ticks,
                                           std::uint64_t dead_time_ticks) {
  std::vector<std::uint64_t> out;
  out.reserve(ticks.size());
  for (std::uint64_t t : ticks) {
    if (out.empty() || t - out.back() >= dead_time_ticks)
      out.push_back(t);
  }
  return out;
}

TimeTagStream quantize(std::span<const double> times, std::uint32_t resolution_ps,
                       std::uint8_t channel_id) {
  if (resolution_ps == 0)
    throw InvalidParameter("resolution must be positive");
  TimeTagStream s;
  s.channel_id = channel_id;
  s.resolution_ps = resolution_ps;
  s.tags.reserve(times.size());
  const double res = static_cast<double>(resolution_ps);
  for (double t : times) {
    if (t < 0.0 || !std::isfinite(t))
      throw InvalidParameter("cannot quantize a negative or non-finite time");
    s.tags.push_back(static_cast<std::uint64_t>(std::floor(t / res)));
  }
  return s;
}

RawDetections sample_detected_pairs(const ExperimentParams &params, double phi,
                                    double t_begin_ps, double t_end_ps,
                                    std::uint64_t rng_seed) {
  validate(params);
  const auto patterns = detection_patterns(params, phi);
  std::array<double, 12> cumulative{};
  double total = 0.0;
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    total += patterns[k].weight;
    cumulative[k] = total;
  }
  RawDetections out;
  const double rate = expected_pair_rate(params) * total;
  if (!(rate > 0.0) || !(t_end_ps > t_begin_ps))
    return out;
  const double expected = rate * (t_end_ps - t_begin_ps) / kPsPerSecond;
  check_capacity(expected, "sample_detected_pairs");
  out.signal_ps.reserve(static_cast<std::size_t>(expected * 0.6) + 16);
  out.idler_ps.reserve(static_cast<std::size_t>(expected * 0.6) + 16);

  Engine rng(rng_seed);
  std::uniform_real_distribution<double> uni(0.0, total);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const double dt = static_cast<double>(params.delta_t_ps);
  poisson_arrivals(rng, rate / kPsPerSecond, t_begin_ps, t_end_ps, [&](double t) {
    const double u = uni(rng);
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k])
      ++k;
    const DetectionPattern &d = patterns[k];
    if (d.det_s)
      out.signal_ps.push_back(t + (d.long_s ? dt : 0.0) + params.jitter_sigma_s_ps * jitter(rng));
    if (d.det_i)
      out.idler_ps.push_back(t + (d.long_i ? dt : 0.0) + params.jitter_sigma_i_ps * jitter(rng));
  });
  return out;
}

SimulatedTags simulate(const ExperimentParams &params, double phi, double duration_s,
                       std::uint64_t rng_seed, unsigned workers) {
  validate(params);
  if (!(duration_s > 0.0))
    throw InvalidParameter("duration must be positive");
  const double end_ps = duration_s * kPsPerSecond;
  const double singles_budget =
      (expected_singles_rate_s(params) + expected_singles_rate_i(params)) * duration_s;
  check_capacity(singles_budget, "simulate");

  const auto chunks = static_cast<std::size_t>(std::ceil(end_ps / kChunkPs));
  struct ChunkResult {
    RawDetections pairs;
    std::vector<double> dark_s, dark_i;
  };
  std::vector<ChunkResult> results(chunks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < chunks; k = next++) {
      const double t0 = static_cast<double>(k) * kChunkPs;
      const double t1 = std::min(end_ps, t0 + kChunkPs);
      auto &r = results[k];
      r.pairs = sample_detected_pairs(params, phi, t0, t1, derive_seed(rng_seed, Stage::Detection, 0, k));
      r.dark_s = dark_train(params.dark_rate_s, t0, t1, derive_seed(rng_seed, Stage::Darks, 0, k));
      r.dark_i = dark_train(params.dark_rate_i, t0, t1, derive_seed(rng_seed, Stage::Darks, 1, k));
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back(work);
    for (auto &t : pool)
      t.join();
  }

  // Single pass per channel: sort photons, merge the darks in (they blind the
  // detector like photons do), clip to [0, T), apply dead time and quantize.
  // Same result as quantize(apply_dead_time(...)) without the intermediates.
  const auto res = static_cast<std::uint32_t>(params.tdc_resolution_ps);
  const double dead = static_cast<double>(params.dead_time_ps);
  auto finalize = [&](bool signal) {
    std::size_t n = 0, nd = 0;
    for (const auto &r : results) {
      n += signal ? r.pairs.signal_ps.size() : r.pairs.idler_ps.size();
      nd += signal ? r.dark_s.size() : r.dark_i.size();
    }
    std::vector<double> photons_all, darks_all;
    photons_all.reserve(n);
    darks_all.reserve(nd);
    for (auto &r : results) {
      auto &photons = signal ? r.pairs.signal_ps : r.pairs.idler_ps;
      auto &darks = signal ? r.dark_s : r.dark_i;
      photons_all.insert(photons_all.end(), photons.begin(), photons.end());
      // Per-chunk dark trains are sorted and the chunks are in time order.
      darks_all.insert(darks_all.end(), darks.begin(), darks.end());
      std::vector<double>().swap(photons);
    }
    sort_nearly_sorted(photons_all);

    TimeTagStream s;
    s.channel_id = signal ? 0 : 1;
    s.resolution_ps = res;
    s.tags.reserve(static_cast<std::size_t>(
        static_cast<double>(n + nd) / (1.0 + static_cast<double>(n + nd) / end_ps * dead)) + 16);
    const double res_d = static_cast<double>(res);
    double last = 0.0;
    bool any = false;
    auto emit = [&](double t) {
      if (t < 0.0 || t >= end_ps || (any && t - last < dead))
        return;
      last = t;
      any = true;
      s.tags.push_back(static_cast<std::uint64_t>(std::floor(t / res_d)));
    };
    std::size_t i = 0, j = 0;
    while (i < photons_all.size() || j < darks_all.size()) {
      if (j == darks_all.size() || (i < photons_all.size() && photons_all[i] <= darks_all[j]))
        emit(photons_all[i++]);
      else
        emit(darks_all[j++]);
    }
    return s;
  };

  SimulatedTags out;
  out.signal = finalize(true);
  out.idler = finalize(false);
  return out;
}

} // namespace franson
