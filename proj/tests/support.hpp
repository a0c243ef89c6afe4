// Apache License, Version 2.0, refer to LICENSE.txt
//
// Shared generators for the test suites.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tailcast/tailcast.hpp"

namespace tailcast::fixtures {

inline std::vector<double> exponential_sample(std::size_t n, double rate, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.exponential(rate);
  return out;
}

/// Exact Pareto(alpha) on [1, inf) by inversion.
inline std::vector<double> pareto_sample(std::size_t n, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = std::pow(rng.uniform_open(), -1.0 / alpha);
  return out;
}

inline std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

/// Events at the given day offsets from a fixed origin, all with magnitude `m`.
inline EventSeries events_at_days(const std::vector<double>& days, double m = 1.0) {
  std::vector<EventRecord> r;
  for (double d : days) r.push_back({1.5e9 + d * kSecondsPerDay, m});
  return EventSeries(std::move(r));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tailcast_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tailcast::fixtures
