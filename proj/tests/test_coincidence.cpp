#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "franson/coincidence.hpp"
#include "franson/errors.hpp"
#include "franson/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace franson;

namespace {

TimeTagStream make_stream(std::vector<std::uint64_t> tags, std::uint32_t res = 1) {
  TimeTagStream s;
  s.resolution_ps = res;
  s.tags = std::move(tags);
  return s;
}

// O(N^2) reference: every ordered pair, lag = a - b, floor-binned.
std::vector<std::uint64_t> brute_force(const TimeTagStream &a, const TimeTagStream &b,
                                       std::int64_t lo, std::int64_t hi, std::int64_t w) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>((hi - lo) / w), 0);
  const auto res = static_cast<std::int64_t>(a.resolution_ps);
  for (auto ta : a.tags)
    for (auto tb : b.tags) {
      const std::int64_t lag = (static_cast<std::int64_t>(ta) - static_cast<std::int64_t>(tb)) * res;
      if (lag < lo || lag >= hi)
        continue;
      std::int64_t k = lag - lo;
      out[static_cast<std::size_t>(k / w)]++;
    }
  return out;
}

TimeTagStream random_stream(Engine &rng, std::size_t n, std::uint64_t span, std::uint32_t res) {
  std::uniform_int_distribution<std::uint64_t> u(0, span);
  std::vector<std::uint64_t> t(n);
  for (auto &x : t)
    x = u(rng);
  std::sort(t.begin(), t.end());
  return make_stream(std::move(t), res);
}

} // namespace

TEST_CASE("single pair lands in the bin containing its lag") {
  const auto a = make_stream({0});
  const auto b = make_stream({750});
  const auto h = build_histogram(a, b, -2000, 2000, 200);
  REQUIRE(h.bins() == 20);
  CHECK(h.total() == 1);
  // -750 lies in [-800, -600)
  const auto k = static_cast<std::size_t>((-800 + 2000) / 200);
  CHECK(h.counts[k] == 1);
  CHECK(h.bin_lower(k) == -800);
  CHECK(h.singles_a == 1);
  CHECK(h.singles_b == 1);
}

TEST_CASE("half-open bins: a lag on an edge belongs to the upper bin") {
  const auto a = make_stream({1000});
  const auto b = make_stream({800, 1200, 3000});
  const auto h = build_histogram(a, b, -2000, 2000, 200);
  CHECK(h.counts[(200 + 2000) / 200] == 1);  // +200
  CHECK(h.counts[(-200 + 2000) / 200] == 1); // -200
  CHECK(h.counts[0] == 1);                   // -2000 is inside the range
  const auto g = build_histogram(b, a, -2000, 2000, 200);
  CHECK(g.total() == 2); // +2000 falls outside [-2000, 2000)
}

TEST_CASE("exactness against the brute-force count") {
  Engine rng(2024);
  std::uniform_int_distribution<std::size_t> size(0, 400);
  std::uniform_int_distribution<int> width(1, 50);
  std::uniform_int_distribution<std::uint32_t> resolution(1, 8);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint32_t res = resolution(rng);
    const auto a = random_stream(rng, size(rng), 200'000, res);
    const auto b = random_stream(rng, size(rng), 200'000, res);
    const std::int64_t w = width(rng) * 10;
    const std::int64_t nb = 1 + static_cast<std::int64_t>(rng() % 200);
    const std::int64_t lo = -static_cast<std::int64_t>(rng() % 30'000);
    const auto h = build_histogram(a, b, lo, lo + nb * w, w);
    REQUIRE(h.counts == brute_force(a, b, lo, lo + nb * w, w));
    const auto p = build_histogram(a, b, lo, lo + nb * w, w, 0.0, 4);
    REQUIRE(p.counts == h.counts);
  }
}

TEST_CASE("duplicate tags and multi-stop counting") {
  const auto a = make_stream({100, 100, 500});
  const auto b = make_stream({100, 300, 300});
  const auto h = build_histogram(a, b, -1000, 1000, 100);
  CHECK(h.counts == brute_force(a, b, -1000, 1000, 100));
  CHECK(h.total() == 9);
}

TEST_CASE("swapping the streams mirrors the histogram") {
  Engine rng(5);
  const auto a = random_stream(rng, 800, 100'000, 1);
  const auto b = random_stream(rng, 800, 100'000, 1);
  // Integer lags: lag_ab in [e, e+100)  <=>  lag_ba in [-e-99, -e+1), so the
  // mirrored grid is shifted by one ps to keep the half-open convention.
  const auto ab = build_histogram(a, b, -5000, 5000, 100);
  const auto ba = build_histogram(b, a, -4999, 5001, 100);
  REQUIRE(ab.bins() == ba.bins());
  for (std::size_t k = 0; k < ab.bins(); ++k)
    CHECK(ab.counts[k] == ba.counts[ab.bins() - 1 - k]);
}

TEST_CASE("uncorrelated streams: flat floor r_a r_b w T") {
  Engine rng(77);
  const double ra = 2e5, rb = 3e5, T = 2.0;
  auto poisson = [&](double rate) {
    std::exponential_distribution<double> gap(rate / 1e12);
    std::vector<std::uint64_t> t;
    for (double x = gap(rng); x < T * 1e12; x += gap(rng))
      t.push_back(static_cast<std::uint64_t>(x));
    return make_stream(std::move(t));
  };
  const auto a = poisson(ra), b = poisson(rb);
  const auto h = build_histogram(a, b, -50'000, 50'000, 1000, T);
  const double mean = static_cast<double>(h.total()) / static_cast<double>(h.bins());
  const double expected = ra * rb * 1e-9 * T;
  CHECK(std::abs(mean - expected) <= 3.0 * std::sqrt(expected / static_cast<double>(h.bins())));
}

TEST_CASE("argument checks") {
  const auto a = make_stream({1, 2, 3});
  SUBCASE("resolution mismatch") {
    const auto b = make_stream({1, 2}, 2);
    CHECK_THROWS_AS(build_histogram(a, b, -10, 10, 2), ConfigurationError);
  }
  SUBCASE("range not a multiple of the bin width") {
    CHECK_THROWS_AS(build_histogram(a, a, -10, 11, 2), InvalidParameter);
  }
  SUBCASE("empty range or bad width") {
    CHECK_THROWS_AS(build_histogram(a, a, 10, 10, 2), InvalidParameter);
    CHECK_THROWS_AS(build_histogram(a, a, -10, 10, 0), InvalidParameter);
  }
  SUBCASE("unsorted input") {
    const auto u = make_stream({3, 1});
    CHECK_THROWS_AS(build_histogram(u, a, -10, 10, 2), InvalidParameter);
  }
  SUBCASE("empty streams") {
    const auto e = make_stream({});
    CHECK(build_histogram(e, a, -10, 10, 2).total() == 0);
  }
}

TEST_CASE("window integration") {
  CoincidenceHistogram h;
  h.bin_width_ps = 200;
  h.lag_min_ps = -1100;
  h.lag_max_ps = 1100;
  h.counts = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(integrate_window(h, 0, 1100) == 66);
  CHECK(integrate_window(h, 0, 0) == 0);
  CHECK(integrate_window(h, 0, 100) == 6); // exactly the central bin [-100, 100)
  CHECK(integrate_window(h, 800, 300) == 9 + 10 + 11); // [500, 1100)
  CHECK_THROWS_AS(integrate_window(h, 0, 150), InvalidParameter);
  CHECK_THROWS_AS(integrate_window(h, 0, 1300), InvalidParameter);
}

TEST_CASE("baseline") {
  CoincidenceHistogram h;
  h.bin_width_ps = 100;
  h.lag_min_ps = -1000;
  h.lag_max_ps = 1000;
  h.counts.assign(20, 7);
  SUBCASE("flat histogram") {
    const auto b = estimate_baseline(h, {});
    CHECK(b.mean_per_bin == doctest::Approx(7.0));
    CHECK(b.standard_error == doctest::Approx(0.0));
    CHECK(b.bins_used == 20);
  }
  SUBCASE("peaks excluded") {
    h.counts[10] = 1000; // [0, 100)
    h.counts[18] = 500;  // [800, 900)
    const LagWindow ex[] = {{0.0, 150.0}, {800.0, 50.0}};
    const auto b = estimate_baseline(h, ex);
    CHECK(b.mean_per_bin == doctest::Approx(7.0));
    // [-150, 150] touches bins 8..11; [750, 850] touches bins 17, 18
    CHECK(b.bins_used == 14);
  }
  SUBCASE("standard error is the sample deviation over root n") {
    h.counts = {2, 4, 6, 8};
    h.lag_min_ps = -200;
    h.lag_max_ps = 200;
    const auto b = estimate_baseline(h, {});
    CHECK(b.mean_per_bin == doctest::Approx(5.0));
    CHECK(b.standard_error == doctest::Approx(std::sqrt(20.0 / 3.0) / 2.0));
  }
  SUBCASE("nothing left") {
    const LagWindow ex[] = {{0.0, 5000.0}};
    CHECK_THROWS_AS(estimate_baseline(h, ex), InvalidParameter);
  }
}

TEST_CASE("singles rate") {
  CHECK(singles_rate(make_stream({}), 10.0) == 0.0);
  std::vector<std::uint64_t> t(1'000'000);
  for (std::size_t k = 0; k < t.size(); ++k)
    t[k] = k * 10;
  CHECK(singles_rate(make_stream(std::move(t)), 10.0) == doctest::Approx(1e5));
}
