// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tailcast/ingest.hpp"

namespace tailcast::cli {

inline constexpr std::uint64_t kDefaultSeed = 2017;
inline constexpr double kDefaultHorizonDays = 365.0;
inline constexpr std::size_t kDefaultBootstrap = 199;

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

struct RunConfig {
  std::string input_path;
  InputFormat input_format = InputFormat::csv;
  std::optional<RescaleMode> rescale;  // none when empty
  std::optional<double> threshold;
  double horizon_days = kDefaultHorizonDays;
  std::size_t n_boot = kDefaultBootstrap;
  std::uint64_t seed = kDefaultSeed;
  std::string output_dir = "out";
  std::optional<std::string> update_file;
};

/// Parses the `--rescale` value; "none" disables rescaling.
std::optional<RescaleMode> parse_rescale_option(const std::string& s);

/// Parses an update file: one positive interarrival (days) per line, blank lines ignored.
std::vector<double> read_update_file(const std::string& path);

int cmd_diagnose(const RunConfig& cfg, std::ostream& err);
int cmd_fit(const RunConfig& cfg, std::ostream& err);
int cmd_forecast(const RunConfig& cfg, std::ostream& err);
int cmd_ingest_check(const RunConfig& cfg, std::ostream& err);

/// Runs `body`, mapping library exceptions to exit codes and reporting them on `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace tailcast::cli
