#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "franson/config.hpp"
#include "franson/errors.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>

using namespace franson;
using nlohmann::json;

TEST_CASE("named preset values") {
  const auto c = paper_preset(ExperimentKind::PhaseScan);
  CHECK(c.params.delta_t_ps == 800);
  CHECK(c.params.jitter_sigma_s_ps == 50.0);
  CHECK(c.params.dead_time_ps == 50'000);
  CHECK(c.bin_width_ps == 200);
  CHECK(c.window_half_width_ps == 100);
  CHECK(c.params.filter_bandwidth_hz == 100e9);
  CHECK(c.params.eta_s == 0.048);
  CHECK(c.params.eta_i == 0.048);
  CHECK(c.params.intrinsic_visibility == 0.971);
  CHECK(c.params.dark_rate_s == 100.0);
  CHECK(c.params.pump_power_mw == 1.7);
  CHECK(c.phases_rad.size() == 16);
  CHECK(c.powers_mw == std::vector<double>{1.0, 1.5, 2.0, 3.0, 4.0, 6.0});
  CHECK_NOTHROW(validate(c));
  CHECK_NOTHROW(validate(paper_preset(ExperimentKind::PowerSweep)));
  CHECK_NOTHROW(validate(paper_preset(ExperimentKind::ShgScan)));
}

TEST_CASE("phase grid") {
  const auto g = uniform_phase_grid(4);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == 0.0);
  CHECK(g[2] == doctest::Approx(std::numbers::pi));
  CHECK(g[3] < 2.0 * std::numbers::pi);
}

TEST_CASE("experiment kind names") {
  CHECK(experiment_kind_from_string("phase_scan") == ExperimentKind::PhaseScan);
  CHECK(experiment_kind_from_string("phase-scan") == ExperimentKind::PhaseScan);
  CHECK(experiment_kind_from_string("shg_scan") == ExperimentKind::ShgScan);
  CHECK(to_string(ExperimentKind::PowerSweep) == "power_sweep");
  CHECK_THROWS_AS(experiment_kind_from_string("bogus"), InvalidParameter);
}

TEST_CASE("JSON parsing") {
  SUBCASE("keys override the base, others keep it") {
    const json j = {{"experiment", "power_sweep"}, {"pump_power_mw", 2.5}, {"delta_t_ps", 900},
                    {"seed", 42}, {"powers_mw", {1, 2, 3, 4}}, {"dark_rate_s_hz", 10.0}};
    const auto c = config_from_json(j, paper_preset());
    CHECK(c.kind == ExperimentKind::PowerSweep);
    CHECK(c.params.pump_power_mw == 2.5);
    CHECK(c.params.delta_t_ps == 900);
    CHECK(c.seed == 42);
    CHECK(c.powers_mw.size() == 4);
    CHECK(c.params.dark_rate_s == 10.0);
    CHECK(c.params.eta_s == 0.048); // from the base
  }
  SUBCASE("phase_points builds a uniform grid") {
    const auto c = config_from_json(json{{"phase_points", 8}});
    CHECK(c.phases_rad.size() == 8);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(config_from_json(json{{"delta_t", 800}}), InvalidParameter);
  }
  SUBCASE("nested object") {
    CHECK_THROWS_AS(config_from_json(json{{"seed", json{{"a", 1}}}}), InvalidParameter);
  }
  SUBCASE("wrong type") {
    CHECK_THROWS_AS(config_from_json(json{{"seed", "abc"}}), InvalidParameter);
  }
  SUBCASE("not an object") {
    CHECK_THROWS_AS(config_from_json(json::array()), InvalidParameter);
  }
}

TEST_CASE("JSON round trip") {
  auto c = paper_preset(ExperimentKind::ShgScan);
  c.seed = 77;
  c.output_dir = "some/dir";
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.seed == 77);
  CHECK(back.temperatures_c == c.temperatures_c);
}

TEST_CASE("config file loading") {
  const auto path = std::filesystem::temp_directory_path() / "franson_config_test.json";
  {
    std::ofstream out(path);
    out << R"({ "experiment": "phase_scan", "duration_s": 2.5, "phase_points": 12 })";
  }
  const auto c = load_config(path);
  CHECK(c.duration_s == 2.5);
  CHECK(c.phases_rad.size() == 12);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), InvalidParameter);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), InvalidParameter);
}

TEST_CASE("run validation") {
  auto c = paper_preset(ExperimentKind::PhaseScan);
  SUBCASE("duration") {
    c.duration_s = 0.0;
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("empty phase grid") {
    c.phases_rad.clear();
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("phase grid shorter than one period") {
    c.phases_rad = {0.0, 0.5, 1.0};
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("phases not increasing") {
    std::swap(c.phases_rad[1], c.phases_rad[2]);
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("too few sweep powers") {
    c.kind = ExperimentKind::PowerSweep;
    c.powers_mw = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("SHG grid narrower than two FWHM") {
    c.kind = ExperimentKind::ShgScan;
    c.temperatures_c = {46.0, 47.0, 48.0, 49.0};
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
  SUBCASE("histogram range not a whole number of bins") {
    c.lag_range_ps = 10'050;
    CHECK_THROWS_AS(validate(c), InvalidParameter);
  }
}
