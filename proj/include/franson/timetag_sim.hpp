#pragma once

#include "franson/physics_model.hpp"
#include "franson/timetag.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace franson {

struct EmissionEvent {
  double t_emit_ps = 0.0;
  JointPathOutcome outcome;
};

/// Detection times (ps, unquantized) before darks and dead time.
struct RawDetections {
  std::vector<double> signal_ps;
  std::vector<double> idler_ps;
};

struct SimulatedTags {
  TimeTagStream signal;
  TimeTagStream idler;
};

/// Homogeneous Poisson emission process of rate kappa P^2 over [0, duration);
/// each event carries an outcome drawn from joint_path_table.
std::vector<EmissionEvent> generate_emissions(const ExperimentParams &params, double phi,
                                              double duration_s, std::uint64_t rng_seed);

/// Applies per-arm transmission, path delays and jitter to a sorted event list.
/// Central events put both photons on the same (equiprobable) arm; SL sends the
/// signal short and the idler long, LS the reverse. Outputs are sorted.
RawDetections route_and_detect(std::span<const EmissionEvent> events,
                               const ExperimentParams &params, double phi,
                               std::uint64_t rng_seed);

/// Merges a Poisson dark-count train into sorted times.
std::vector<double> add_dark_counts(std::span<const double> times, double dark_rate,
                                    double duration_s, std::uint64_t rng_seed);

/// Non-paralyzable detector: keeps a tag iff it is at least dead_time after the
/// last kept tag.
std::vector<double> apply_dead_time(std::span<const double> times, double dead_time_ps);
std::vector<std::uint64_t> apply_dead_time(std::span<const std::uint64_t> ticks,
                                           std::uint64_t dead_time_ticks);

/// floor(t / resolution). Negative times are rejected.
TimeTagStream quantize(std::span<const double> times, std::uint32_t resolution_ps,
                       std::uint8_t channel_id = 0);

/// Detected photons of the pairs in [t_begin, t_end), sampled directly from the
/// thinned process of pairs with at least one detection. Equal in distribution
/// to route_and_detect(generate_emissions(...)) restricted to the interval.
RawDetections sample_detected_pairs(const ExperimentParams &params, double phi,
                                    double t_begin_ps, double t_end_ps,
                                    std::uint64_t rng_seed);

/// Full acquisition: detected pairs, darks, dead time, TDC quantization.
/// The duration is processed in fixed one-second chunks with per-chunk seeds, so
/// the output does not depend on `workers`.
SimulatedTags simulate(const ExperimentParams &params, double phi, double duration_s,
                       std::uint64_t rng_seed, unsigned workers = 1);

} // namespace franson
