// Apache License, Version 2.0, refer to LICENSE.txt
//
// Writes a synthetic event file for trying the command-line tool:
//   synthetic_events [n_events] [seed] > events.csv
// Events arrive as a Poisson stream (4 per day on average) with
// GPD(0.77, 8750) magnitudes above 10^4.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>

#include "tailcast/tailcast.hpp"

int main(int argc, char** argv) {
  using namespace tailcast;
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 5000;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

  const GpdParams marks{0.77, 8750.0, 1e4};
  const auto magnitudes = gpd_sample(marks, n, seed);
  Rng clock(derive_seed(seed, 1));

  std::vector<EventRecord> records;
  double t = 1.4e9;
  for (double m : magnitudes) {
    t += std::round(clock.exponential(4.0) * kSecondsPerDay);
    records.push_back({t, std::round(m)});
  }
  write_events_csv(std::cout, EventSeries(std::move(records)));
}
