#include "franson/coincidence.hpp"

#include "franson/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace franson {

namespace {

bool is_sorted_stream(const TimeTagStream &s) {
  return std::is_sorted(s.tags.begin(), s.tags.end());
}

// Counts lags for a[begin, end) against all of b. Tags are converted to ps.
void correlate_slice(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                     std::int64_t res, std::int64_t lag_min, std::int64_t lag_max,
                     std::int64_t width, std::vector<std::uint64_t> &counts) {
  if (a.empty() || b.empty())
    return;
  // First b that can pair with a[0]: t_b > t_a - lag_max.
  const std::int64_t first_a = static_cast<std::int64_t>(a.front()) * res;
  std::size_t lo = 0;
  {
    const std::int64_t bound = first_a - lag_max; // need t_b > bound
    lo = static_cast<std::size_t>(
        std::upper_bound(b.begin(), b.end(), bound,
                         [res](std::int64_t v, std::uint64_t tb) {
                           return v < static_cast<std::int64_t>(tb) * res;
                         }) -
        b.begin());
  }
  const std::size_t nb = b.size();
  for (std::uint64_t ta_tick : a) {
    const std::int64_t ta = static_cast<std::int64_t>(ta_tick) * res;
    while (lo < nb && ta - static_cast<std::int64_t>(b[lo]) * res >= lag_max)
      ++lo;
    for (std::size_t j = lo; j < nb; ++j) {
      const std::int64_t lag = ta - static_cast<std::int64_t>(b[j]) * res;
      if (lag < lag_min)
        break;
      ++counts[static_cast<std::size_t>((lag - lag_min) / width)];
    }
  }
}

} // namespace

std::uint64_t CoincidenceHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CoincidenceHistogram build_histogram(const TimeTagStream &a, const TimeTagStream &b,
                                     std::int64_t lag_min_ps, std::int64_t lag_max_ps,
                                     std::int64_t bin_width_ps, double duration_s,
                                     unsigned workers) {
  if (a.resolution_ps != b.resolution_ps)
    throw ConfigurationError("streams have different resolutions (" +
                             std::to_string(a.resolution_ps) + " vs " +
                             std::to_string(b.resolution_ps) + " ps)");
  if (bin_width_ps <= 0)
    throw InvalidParameter("bin width must be positive");
  if (lag_max_ps <= lag_min_ps || (lag_max_ps - lag_min_ps) % bin_width_ps != 0)
    throw InvalidParameter("lag range must be non-empty and a whole number of bins");
  if (!is_sorted_stream(a) || !is_sorted_stream(b))
    throw InvalidParameter("time-tag streams must be sorted");

  CoincidenceHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.lag_min_ps = lag_min_ps;
  h.lag_max_ps = lag_max_ps;
  h.duration_s = duration_s;
  h.singles_a = a.size();
  h.singles_b = b.size();
  h.tick_ps = static_cast<std::int64_t>(a.resolution_ps);
  const auto nbins = static_cast<std::size_t>((lag_max_ps - lag_min_ps) / bin_width_ps);
  h.counts.assign(nbins, 0);

  const auto res = static_cast<std::int64_t>(a.resolution_ps);
  const std::size_t slices = std::max<std::size_t>(1, std::min<std::size_t>(workers, a.size() / 4096 + 1));
  if (slices == 1) {
    correlate_slice(a.tags, b.tags, res, lag_min_ps, lag_max_ps, bin_width_ps, h.counts);
    return h;
  }
  std::vector<std::vector<std::uint64_t>> partial(slices, std::vector<std::uint64_t>(nbins, 0));
  std::vector<std::thread> pool;
  const std::size_t per = (a.size() + slices - 1) / slices;
  const std::span<const std::uint64_t> all_a(a.tags);
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t begin = std::min(a.size(), s * per);
    const std::size_t end = std::min(a.size(), begin + per);
    pool.emplace_back([&, s, begin, end] {
      correlate_slice(all_a.subspan(begin, end - begin), b.tags, res, lag_min_ps, lag_max_ps,
                      bin_width_ps, partial[s]);
    });
  }
  for (auto &t : pool)
    t.join();
  for (const auto &p : partial)
    for (std::size_t k = 0; k < nbins; ++k)
      h.counts[k] += p[k];
  return h;
}

std::uint64_t integrate_window(const CoincidenceHistogram &hist, std::int64_t center_ps,
                               std::int64_t half_width_ps) {
  if (half_width_ps < 0)
    throw InvalidParameter("window half width must be non-negative");
  if (half_width_ps == 0)
    return 0;
  const std::int64_t lo = center_ps - half_width_ps;
  const std::int64_t hi = center_ps + half_width_ps;
  if (lo < hist.lag_min_ps || hi > hist.lag_max_ps)
    throw InvalidParameter("integration window lies outside the histogram range");
  if ((lo - hist.lag_min_ps) % hist.bin_width_ps != 0 ||
      (hi - hist.lag_min_ps) % hist.bin_width_ps != 0)
    throw InvalidParameter("integration window edges must fall on bin boundaries");
  const auto first = static_cast<std::size_t>((lo - hist.lag_min_ps) / hist.bin_width_ps);
  const auto last = static_cast<std::size_t>((hi - hist.lag_min_ps) / hist.bin_width_ps);
  return std::accumulate(hist.counts.begin() + static_cast<std::ptrdiff_t>(first),
                         hist.counts.begin() + static_cast<std::ptrdiff_t>(last), std::uint64_t{0});
}

BaselineEstimate estimate_baseline(const CoincidenceHistogram &hist,
                                   std::span<const LagWindow> exclusions) {
  std::vector<double> kept;
  kept.reserve(hist.bins());
  for (std::size_t k = 0; k < hist.bins(); ++k) {
    const double lo = static_cast<double>(hist.bin_lower(k));
    const double hi = lo + static_cast<double>(hist.bin_width_ps);
    const bool excluded = std::any_of(exclusions.begin(), exclusions.end(), [&](const LagWindow &w) {
      return hi > w.center_ps - w.half_width_ps && lo < w.center_ps + w.half_width_ps;
    });
    if (!excluded)
      kept.push_back(static_cast<double>(hist.counts[k]));
  }
  if (kept.empty())
    throw InvalidParameter("no histogram bins remain outside the excluded peaks");
  BaselineEstimate est;
  est.bins_used = kept.size();
  const double n = static_cast<double>(kept.size());
  est.mean_per_bin = std::accumulate(kept.begin(), kept.end(), 0.0) / n;
  if (kept.size() > 1) {
    double ss = 0.0;
    for (double v : kept)
      ss += (v - est.mean_per_bin) * (v - est.mean_per_bin);
    est.standard_error = std::sqrt(ss / (n - 1.0) / n);
  } else {
    est.standard_error = std::sqrt(est.mean_per_bin);
  }
  return est;
}

double singles_rate(const TimeTagStream &stream, double duration_s) {
  if (!(duration_s > 0.0))
    throw InvalidParameter("duration must be positive");
  return static_cast<double>(stream.size()) / duration_s;
}

} // namespace franson
