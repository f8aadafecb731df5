#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "franson/coincidence.hpp"
#include "franson/errors.hpp"
#include "franson/timetag_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace franson;
using std::numbers::pi;

namespace {

ExperimentParams rate_params(double pair_rate) {
  ExperimentParams p;
  p.pair_coeff = pair_rate;
  p.pump_power_mw = 1.0;
  return p;
}

bool within_sigma(double observed, double expected, double n_sigma) {
  return std::abs(observed - expected) <= n_sigma * std::sqrt(expected);
}

std::uint64_t window_count(const TimeTagStream &a, const TimeTagStream &b, std::int64_t center,
                           std::int64_t half) {
  const auto h = build_histogram(a, b, center - half, center + half, 2 * half);
  return h.total();
}

} // namespace

TEST_CASE("emissions: Poisson count, ordering and determinism") {
  auto p = rate_params(1e4);
  const auto ev = generate_emissions(p, 0.0, 10.0, 11);
  CHECK(within_sigma(static_cast<double>(ev.size()), 1e5, 5.0));
  CHECK(std::is_sorted(ev.begin(), ev.end(),
                       [](const auto &x, const auto &y) { return x.t_emit_ps < y.t_emit_ps; }));
  CHECK(ev.front().t_emit_ps >= 0.0);
  CHECK(ev.back().t_emit_ps < 10e12);

  const auto again = generate_emissions(p, 0.0, 10.0, 11);
  REQUIRE(again.size() == ev.size());
  for (std::size_t k = 0; k < ev.size(); ++k) {
    CHECK(again[k].t_emit_ps == ev[k].t_emit_ps);
    CHECK(again[k].outcome.category == ev[k].outcome.category);
  }

  p.pump_power_mw = 0.0;
  CHECK(generate_emissions(p, 0.0, 10.0, 11).empty());
}

TEST_CASE("emissions: category frequencies follow the table") {
  auto p = rate_params(2e5);
  const auto ev = generate_emissions(p, 0.0, 1.0, 3);
  const double n = static_cast<double>(ev.size());
  double sl = 0, ls = 0, mm = 0;
  for (const auto &e : ev) {
    sl += e.outcome.category == PathCategory::SideSL;
    ls += e.outcome.category == PathCategory::SideLS;
    mm += e.outcome.category == PathCategory::Central && e.outcome.detect_s && e.outcome.detect_i;
  }
  CHECK(within_sigma(sl, n / 4, 5.0));
  CHECK(within_sigma(ls, n / 4, 5.0));
  CHECK(within_sigma(mm, n / 4, 5.0)); // p_central * p_mm = 1/2 * 1/2 at V0 = 1, phi = 0
}

TEST_CASE("emissions: capacity guard") {
  auto p = rate_params(1e10);
  CHECK_THROWS_AS(generate_emissions(p, 0.0, 1.0, 1), CapacityError);
}

TEST_CASE("routing: path delays with zero jitter") {
  ExperimentParams p = rate_params(1.0);
  p.jitter_sigma_s_ps = p.jitter_sigma_i_ps = 0.0;
  p.eta_s = p.eta_i = 1.0;

  SUBCASE("central pair, both detected: equal times") {
    const EmissionEvent e{1000.0, {PathCategory::Central, true, true}};
    const auto d = route_and_detect(std::span(&e, 1), p, 0.0, 1);
    REQUIRE(d.signal_ps.size() == 1);
    REQUIRE(d.idler_ps.size() == 1);
    CHECK(d.signal_ps[0] == d.idler_ps[0]);
  }
  SUBCASE("SL pair: idler arrives delta_t after the signal") {
    const EmissionEvent e{1000.0, {PathCategory::SideSL, true, true}};
    const auto d = route_and_detect(std::span(&e, 1), p, 0.0, 1);
    REQUIRE(d.signal_ps.size() == 1);
    REQUIRE(d.idler_ps.size() == 1);
    CHECK(d.idler_ps[0] - d.signal_ps[0] == 800.0);
  }
  SUBCASE("LS pair: signal arrives delta_t after the idler") {
    const EmissionEvent e{1000.0, {PathCategory::SideLS, true, true}};
    const auto d = route_and_detect(std::span(&e, 1), p, 0.0, 1);
    CHECK(d.signal_ps[0] - d.idler_ps[0] == 800.0);
  }
  SUBCASE("photon that leaves by the other port is never detected") {
    const EmissionEvent e{1000.0, {PathCategory::Central, true, false}};
    const auto d = route_and_detect(std::span(&e, 1), p, 0.0, 1);
    CHECK(d.signal_ps.size() == 1);
    CHECK(d.idler_ps.empty());
  }
}

TEST_CASE("routing: destructive setting leaves only side-peak coincidences") {
  ExperimentParams p = rate_params(1e5);
  p.jitter_sigma_s_ps = p.jitter_sigma_i_ps = 0.0;
  p.eta_s = p.eta_i = 1.0;
  const auto ev = generate_emissions(p, pi, 1.0, 5);
  const auto d = route_and_detect(ev, p, pi, 5);
  const auto s = quantize(d.signal_ps, 1);
  const auto i = quantize(d.idler_ps, 1);
  // Zero jitter: same-pair lags are exactly 0 or +-delta_t (quantization may
  // split one tick). Accidental pairs inside +-1 ps are vanishingly rare.
  CHECK(window_count(s, i, 0, 2) == 0);
  CHECK(window_count(s, i, -800, 2) > 0);
  CHECK(window_count(s, i, 800, 2) > 0);
}

TEST_CASE("dark counts") {
  const std::vector<double> in = {5.0, 10.0, 1e9};
  const auto same = add_dark_counts(in, 0.0, 1.0, 1);
  CHECK(same == in);

  const auto darks = add_dark_counts({}, 100.0, 100.0, 2);
  CHECK(within_sigma(static_cast<double>(darks.size()), 1e4, 5.0));

  const auto merged = add_dark_counts(in, 1e3, 1.0, 3);
  CHECK(std::is_sorted(merged.begin(), merged.end()));
  CHECK(merged.size() > in.size());
}

TEST_CASE("dead time") {
  SUBCASE("hand-traced example") {
    const std::vector<double> t = {0.0, 30'000.0, 60'000.0};
    CHECK(apply_dead_time(t, 50'000.0) == std::vector<double>{0.0, 60'000.0});
    const std::vector<std::uint64_t> k = {0, 30'000, 60'000};
    CHECK(apply_dead_time(k, 50'000) == std::vector<std::uint64_t>{0, 60'000});
  }
  SUBCASE("zero dead time is the identity") {
    const std::vector<double> t = {0.0, 1.0, 1.0, 2.0};
    CHECK(apply_dead_time(t, 0.0) == t);
  }
  SUBCASE("non-paralyzable throughput") {
    const double rate = 1e6, tau = 50e-9, T = 2.0;
    const auto train = add_dark_counts({}, rate, T, 17);
    const auto kept = apply_dead_time(train, tau * 1e12);
    const double expected = rate / (1.0 + rate * tau) * T;
    CHECK(within_sigma(static_cast<double>(kept.size()), expected, 3.0));
    for (std::size_t k = 1; k < kept.size(); ++k)
      REQUIRE(kept[k] - kept[k - 1] >= tau * 1e12);
  }
}

TEST_CASE("quantize") {
  const std::vector<double> t = {999.0};
  CHECK(quantize(t, 200).tags == std::vector<std::uint64_t>{4});
  const std::vector<double> u = {0.0, 1.0, 2.7, 1e6 + 0.5};
  const auto q = quantize(u, 1, 3);
  CHECK(q.tags == std::vector<std::uint64_t>{0, 1, 2, 1'000'000});
  CHECK(q.channel_id == 3);
  CHECK(q.resolution_ps == 1);

  // Idempotent at a fixed resolution.
  const auto once = quantize(u, 7);
  std::vector<double> back;
  for (auto k : once.tags)
    back.push_back(static_cast<double>(k) * 7.0);
  CHECK(quantize(back, 7).tags == once.tags);

  const std::vector<double> neg = {-1.0};
  CHECK_THROWS_AS(quantize(neg, 1), InvalidParameter);
  CHECK_THROWS_AS(quantize(u, 0), InvalidParameter);
}

TEST_CASE("thinned sampler matches the emission-level reference") {
  ExperimentParams p = rate_params(2e5);
  p.eta_s = 0.3;
  p.eta_i = 0.2;
  p.intrinsic_visibility = 0.9;
  const double phi = 0.7, T = 4.0;

  const auto ev = generate_emissions(p, phi, T, 21);
  const auto ref = route_and_detect(ev, p, phi, 21);
  const auto thin = sample_detected_pairs(p, phi, 0.0, T * 1e12, 22);

  auto tags = [](const RawDetections &d) {
    std::vector<double> s = d.signal_ps, i = d.idler_ps;
    std::sort(s.begin(), s.end());
    std::sort(i.begin(), i.end());
    std::erase_if(s, [](double t) { return t < 0.0; });
    std::erase_if(i, [](double t) { return t < 0.0; });
    return std::pair{quantize(s, 1), quantize(i, 1)};
  };
  const auto [rs, ri] = tags(ref);
  const auto [ts, ti] = tags(thin);

  auto consistent = [](double a, double b) { return std::abs(a - b) <= 5.0 * std::sqrt(a + b); };
  CHECK(consistent(rs.size(), ts.size()));
  CHECK(consistent(ri.size(), ti.size()));
  for (std::int64_t c : {-800, 0, 800})
    CHECK(consistent(window_count(rs, ri, c, 300), window_count(ts, ti, c, 300)));

  // And both against the closed forms.
  const double R = 2e5 * T;
  CHECK(within_sigma(ts.size(), R * 0.3 / 2.0, 5.0));
  CHECK(within_sigma(ti.size(), R * 0.2 / 2.0, 5.0));
  CHECK(within_sigma(window_count(ts, ti, 0, 300), R * 0.06 * (1 + 0.9 * std::cos(phi)) / 8.0, 5.0));
  CHECK(within_sigma(window_count(ts, ti, -800, 300), R * 0.06 / 16.0, 5.0));
}

TEST_CASE("simulate: stream invariants and determinism across workers") {
  ExperimentParams p = rate_params(4e5);
  const double T = 3.0;
  const auto a = simulate(p, 0.2, T, 99, 1);
  const auto b = simulate(p, 0.2, T, 99, 3);
  CHECK(a.signal == b.signal);
  CHECK(a.idler == b.idler);
  CHECK(a.signal.channel_id == 0);
  CHECK(a.idler.channel_id == 1);
  for (const auto *s : {&a.signal, &a.idler}) {
    REQUIRE(!s->tags.empty());
    CHECK(s->tags.back() < static_cast<std::uint64_t>(T * 1e12));
    bool ok = true;
    for (std::size_t k = 1; k < s->tags.size(); ++k)
      ok = ok && s->tags[k] - s->tags[k - 1] >= static_cast<std::uint64_t>(p.dead_time_ps);
    CHECK(ok);
  }
  const auto c = simulate(p, 0.2, T, 100, 1);
  CHECK(c.signal != a.signal);
}

TEST_CASE("simulate: singles match the dead-time-loaded closed form") {
  ExperimentParams p = rate_params(4e5);
  const double T = 60.0;
  const auto s = simulate(p, 0.0, T, 7, 1);
  const double tau = static_cast<double>(p.dead_time_ps) * 1e-12;
  CHECK(within_sigma(s.signal.size(), dead_time_loaded_rate(expected_singles_rate_s(p), tau) * T, 5.0));
  CHECK(within_sigma(s.idler.size(), dead_time_loaded_rate(expected_singles_rate_i(p), tau) * T, 5.0));
}

TEST_CASE("simulate: singles do not depend on the phase") {
  ExperimentParams p = rate_params(1e6);
  p.intrinsic_visibility = 1.0;
  std::vector<double> ns, ni;
  for (double phi : {0.0, pi / 2, pi}) {
    const auto s = simulate(p, phi, 5.0, 31, 1);
    ns.push_back(static_cast<double>(s.signal.size()));
    ni.push_back(static_cast<double>(s.idler.size()));
  }
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(std::abs(ns[k] - ns[0]) <= 4.0 * std::sqrt(ns[k] + ns[0]));
    CHECK(std::abs(ni[k] - ni[0]) <= 4.0 * std::sqrt(ni[k] + ni[0]));
  }
}

TEST_CASE("simulate: histogram converges to the expected histogram") {
  ExperimentParams p = rate_params(2e5);
  p.eta_s = p.eta_i = 0.5;
  p.dead_time_ps = 0;
  p.intrinsic_visibility = 0.9;
  const double phi = 0.8, T = 20.0;
  const auto s = simulate(p, phi, T, 41, 1);
  const auto h = build_histogram(s.signal, s.idler, -4000, 4000, 20, T);
  const auto e = expected_histogram(p, phi, T, 20.0, 4000.0);
  REQUIRE(h.bins() == e.bins());
  CHECK(h.total() > 100'000);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < h.bins(); ++k) {
    const double d = static_cast<double>(h.counts[k]) - e.expected_counts[k];
    chi2 += d * d / e.expected_counts[k];
  }
  const double per_dof = chi2 / static_cast<double>(h.bins());
  CHECK(per_dof >= 0.7);
  CHECK(per_dof <= 1.3);
}
