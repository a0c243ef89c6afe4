// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "commands.hpp"

using namespace tailcast::cli;

int main(int argc, char** argv) {
  CLI::App app{"tailcast: heavy-tail diagnostics, peaks-over-threshold fitting and extreme-event forecasts"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string format = "csv";
  std::string rescale = "none";
  double threshold = 0;
  std::string update_file;

  app.add_option("--input", cfg.input_path, "Event file (timestamp, magnitude)");
  app.add_option("--format", format, "Input format: csv or jsonl")->capture_default_str();
  app.add_option("--rescale", rescale, "Weekly activity rescaling: max, mean, median or none")->capture_default_str();
  auto* threshold_opt = app.add_option("--threshold", threshold, "Magnitude threshold");
  app.add_option("--horizon-days", cfg.horizon_days, "Forecast horizon in days")->capture_default_str();
  app.add_option("--n-boot", cfg.n_boot, "Bootstrap replicates for the goodness-of-fit test")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for randomized procedures")->capture_default_str();
  app.add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();
  auto* update_opt = app.add_option("--update-file", update_file, "New interarrival times (days), one per line");

  auto* diagnose = app.add_subcommand("diagnose", "Records, CCDF, mean excess, Hill, Pickands and max/sum series");
  auto* fit = app.add_subcommand("fit", "GPD threshold-stability table and bootstrap goodness of fit");
  auto* forecast = app.add_subcommand("forecast", "Poisson exceedance process and Bayesian count forecast");
  auto* ingest = app.add_subcommand("ingest-check", "Parsed series, weekly activity and rescale factors");
  for (auto* sub : {diagnose, fit, forecast, ingest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  const int parsed = run_guarded(
      [&] {
        cfg.input_format = tailcast::parse_input_format(format);
        cfg.rescale = parse_rescale_option(rescale);
        if (threshold_opt->count() > 0) cfg.threshold = threshold;
        if (update_opt->count() > 0) cfg.update_file = update_file;
        return kExitOk;
      },
      std::cerr);
  if (parsed != kExitOk) return parsed;

  if (diagnose->parsed()) return cmd_diagnose(cfg, std::cerr);
  if (fit->parsed()) return cmd_fit(cfg, std::cerr);
  if (forecast->parsed()) return cmd_forecast(cfg, std::cerr);
  return cmd_ingest_check(cfg, std::cerr);
}
