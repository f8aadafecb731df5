#pragma once

#include "franson/timetag.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace franson {

/// Counts of tau = t_a - t_b in half-open bins [edge, edge + width) over
/// [lag_min, lag_max).
struct CoincidenceHistogram {
  std::int64_t bin_width_ps = 200;
  std::int64_t lag_min_ps = 0;
  std::int64_t lag_max_ps = 0;
  std::vector<std::uint64_t> counts;
  double duration_s = 0.0;
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  /// Tag resolution of the correlated streams; lags are multiples of it, so a
  /// bin [lo, hi) holds continuous lags in about [lo - tick/2, hi - tick/2).
  /// Zero for histograms of continuous lags.
  std::int64_t tick_ps = 0;

  std::size_t bins() const { return counts.size(); }
  std::int64_t bin_lower(std::size_t k) const {
    return lag_min_ps + static_cast<std::int64_t>(k) * bin_width_ps;
  }
  double bin_center(std::size_t k) const {
    return static_cast<double>(bin_lower(k)) + 0.5 * static_cast<double>(bin_width_ps);
  }
  std::uint64_t total() const;
};

/// Multi-stop correlation of two sorted streams with a sliding two-pointer
/// window: every ordered pair with lag in range is counted exactly once.
/// `workers` > 1 splits stream a into independent slices.
CoincidenceHistogram build_histogram(const TimeTagStream &a, const TimeTagStream &b,
                                     std::int64_t lag_min_ps, std::int64_t lag_max_ps,
                                     std::int64_t bin_width_ps, double duration_s = 0.0,
                                     unsigned workers = 1);

/// Sum of the bins lying inside [center - half_width, center + half_width].
/// Both window edges must fall on bin boundaries.
std::uint64_t integrate_window(const CoincidenceHistogram &hist, std::int64_t center_ps,
                               std::int64_t half_width_ps);

struct LagWindow {
  double center_ps = 0.0;
  double half_width_ps = 0.0;
};

struct BaselineEstimate {
  double mean_per_bin = 0.0;
  double standard_error = 0.0;
  std::size_t bins_used = 0;
};

/// Mean counts per bin over the bins that do not touch any exclusion window.
BaselineEstimate estimate_baseline(const CoincidenceHistogram &hist,
                                   std::span<const LagWindow> exclusions);

/// Tag count over acquisition time.
double singles_rate(const TimeTagStream &stream, double duration_s);

} // namespace franson
