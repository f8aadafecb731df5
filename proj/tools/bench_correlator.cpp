// Correlator throughput: tags per second through build_histogram on simulated
// streams at a few pump powers. Prints a table; asserts nothing.

#include "franson/coincidence.hpp"
#include "franson/config.hpp"
#include "franson/timetag_sim.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace franson;

int main(int argc, char **argv) {
  const double duration = argc > 1 ? std::atof(argv[1]) : 10.0;
  const unsigned workers = argc > 2 ? static_cast<unsigned>(std::atoi(argv[2])) : 1u;
  RunConfig c = paper_preset();
  std::printf("power_mw,tags,sim_s,hist_s,mtags_per_s\n");
  for (double p : {1.0, 3.0, 6.0}) {
    c.params.pump_power_mw = p;
    const auto t0 = std::chrono::steady_clock::now();
    const SimulatedTags tags = simulate(c.params, 0.0, duration, 7, workers);
    const auto t1 = std::chrono::steady_clock::now();
    const auto hist = build_histogram(tags.signal, tags.idler, -c.lag_range_ps, c.lag_range_ps,
                                      c.bin_width_ps, duration, workers);
    const auto t2 = std::chrono::steady_clock::now();
    const double sim_s = std::chrono::duration<double>(t1 - t0).count();
    const double hist_s = std::chrono::duration<double>(t2 - t1).count();
    const double n = static_cast<double>(tags.signal.size() + tags.idler.size());
    std::printf("%g,%.0f,%.3f,%.3f,%.2f\n", p, n, sim_s, hist_s, n / hist_s / 1e6);
    (void)hist;
  }
}
