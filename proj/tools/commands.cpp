// Apache License, Version 2.0, refer to LICENSE.txt

#include "commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tailcast/tailcast.hpp"

namespace fs = std::filesystem;

namespace tailcast::cli {
namespace {

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

/// Writes the files of one subcommand under `<out>/<subcommand>/` and a
/// manifest.json listing each artifact with its size and SHA-256.
class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, std::string subcommand)
      : subcommand_(std::move(subcommand)), dir_(fs::path(cfg.output_dir) / subcommand_) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream buf;
    fill(buf);
    const std::string bytes = buf.str();
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << bytes;
    if (!out.flush()) throw Error("failed writing " + (dir_ / name).string());
    manifest_.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& os) {
      tailcast::write_json(os, j);
      os << '\n';
    });
  }

  void write_series(const std::string& name, const DiagnosticSeries& s) {
    write(name, [&](std::ostream& os) { write_csv(os, s); });
  }

  void finish() {
    const json m{{"subcommand", subcommand_}, {"artifacts", manifest_}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    tailcast::write_json(out, m);
    out << '\n';
    if (!out.flush()) throw Error("failed writing manifest");
  }

 private:
  std::string subcommand_;
  fs::path dir_;
  json manifest_ = json::array();
};

struct LoadedInput {
  ParsedEvents parsed;
  EventSeries series;  // rescaled when requested
  std::vector<WeeklyActivity> weeks;
  std::optional<RescalePlan> plan;
};

LoadedInput load_input(const RunConfig& cfg, std::ostream& err) {
  if (cfg.input_path.empty()) throw InputError("--input is required");
  std::ifstream in(cfg.input_path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + cfg.input_path + "'");
  auto parsed = parse_events(in, cfg.input_format);
  constexpr std::size_t kShownIssues = 10;
  for (std::size_t i = 0; i < parsed.malformed.size() && i < kShownIssues; ++i)
    err << "warning: line " << parsed.malformed[i].line << ": " << parsed.malformed[i].message << '\n';
  if (parsed.malformed.size() > kShownIssues)
    err << "warning: " << parsed.malformed.size() - kShownIssues << " more malformed rows\n";

  auto weeks = bucket_weekly(parsed.series);
  std::optional<RescalePlan> plan;
  EventSeries series = parsed.series;
  if (cfg.rescale) {
    plan = rescale_factors(weeks, *cfg.rescale);
    series = apply_rescale(parsed.series, *plan);
  }
  return {std::move(parsed), std::move(series), std::move(weeks), std::move(plan)};
}

json input_summary(const RunConfig& cfg, const LoadedInput& in) {
  return {{"rows_read", in.parsed.rows_read},
          {"events", in.series.size()},
          {"malformed_rows", in.parsed.malformed.size()},
          {"rescale", cfg.rescale ? to_string(*cfg.rescale) : "none"}};
}

double required_threshold(const RunConfig& cfg) {
  if (!cfg.threshold) throw InputError("--threshold is required");
  if (!(*cfg.threshold > 0) || !std::isfinite(*cfg.threshold)) throw InputError("--threshold must be > 0");
  return *cfg.threshold;
}

int do_diagnose(const RunConfig& cfg, std::ostream& err) {
  const auto in = load_input(cfg, err);
  const auto xs = in.series.magnitudes();
  std::vector<double> positive;
  for (double x : xs)
    if (x > 0) positive.push_back(x);
  if (positive.size() < 4)
    throw InsufficientDataError("diagnostics require at least 4 positive magnitudes, got " +
                                std::to_string(positive.size()));

  const auto records = records_analysis(xs);
  const auto ccdf = empirical_ccdf(xs);
  const auto mef = mean_excess(xs, default_mef_thresholds(xs));
  const auto onset = mef_linear_onset(mef);
  const auto hill = hill_curve(positive);
  const auto pickands = pickands_curve(xs);
  const auto maxsum = max_sum_ratio(xs, 1.0);

  ArtifactWriter out(cfg, "diagnose");
  out.write_series("diagnose.records.csv", records.as_series());
  out.write_series("diagnose.ccdf.csv", ccdf);
  out.write_series("diagnose.mef.csv", mef);
  out.write_series("diagnose.hill.csv", hill);
  out.write_series("diagnose.pickands.csv", pickands);
  out.write_series("diagnose.maxsum.csv", maxsum);

  json summary = input_summary(cfg, in);
  const auto& band = records.band95.back();
  summary["records"] = {{"n", xs.size()},
                        {"count", records.record_count()},
                        {"expected", records.expected.back().second},
                        {"band95", {band.low, band.high}},
                        {"within_band", records.within_band_at_end()}};
  if (onset) {
    summary["mef_linear_onset"] = {{"threshold", onset->onset},
                                   {"slope", onset->slope},
                                   {"intercept", onset->intercept},
                                   {"r_squared", onset->r_squared},
                                   {"n_points", onset->n_points}};
  } else {
    summary["mef_linear_onset"] = nullptr;
  }
  json ratios = json::object();
  for (int p = 1; p <= 4; ++p) {
    const auto r = max_sum_ratio(xs, static_cast<double>(p));
    ratios[std::to_string(p)] = r.points.back().y;
  }
  summary["max_sum_final"] = std::move(ratios);
  summary["pickands_omitted"] = pickands.scalars.at("omitted");
  out.write_json("summary.json", summary);
  out.finish();
  return kExitOk;
}

int do_fit(const RunConfig& cfg, std::ostream& err) {
  const double t = required_threshold(cfg);
  if (cfg.n_boot < kMinBootstrapReplicates)
    throw InputError("--n-boot must be at least " + std::to_string(kMinBootstrapReplicates));
  const auto in = load_input(cfg, err);
  const auto xs = in.series.magnitudes();
  const auto exc = exceedances(xs, t);
  if (exc.size() < kMinFitExceedances)
    throw InsufficientDataError("threshold " + format_number(t) + " leaves " + std::to_string(exc.size()) +
                                " exceedances (need " + std::to_string(kMinFitExceedances) + ")");

  const std::array<double, 5> multipliers{1.0, 2.5, 5.0, 10.0, 15.0};
  std::vector<double> grid;
  for (double m : multipliers) grid.push_back(t * m);
  const auto scan = threshold_scan(xs, grid);
  for (const auto& e : scan)
    if (!e.warning.empty()) err << "warning: threshold " << format_number(e.threshold) << ": " << e.warning << '\n';

  ArtifactWriter out(cfg, "fit");
  out.write("fit.stability.csv", [&](std::ostream& os) { write_stability_csv(os, scan); });
  out.write_json("fit.stability.json", to_json(scan));

  const auto& main = scan.front();
  if (!main.fit->converged) {
    json j = input_summary(cfg, in);
    j["fit"] = to_json(*main.fit);
    j["error"] = main.warning;
    out.write_json("fit.json", j);
    out.finish();
    err << "error: GPD fit at threshold " << format_number(t) << " did not converge; best iterate written\n";
    return kExitNumerical;
  }
  if (exc.size() < kMinGofExceedances) {
    out.finish();
    throw InsufficientDataError("goodness-of-fit test requires at least " + std::to_string(kMinGofExceedances) +
                                " exceedances, got " + std::to_string(exc.size()));
  }
  const auto gof = bootstrap_gof(exc, t, cfg.n_boot, cfg.seed);
  json j = input_summary(cfg, in);
  j["gof"] = to_json(gof);
  out.write_json("gof.json", j);
  out.finish();
  return kExitOk;
}

int do_forecast(const RunConfig& cfg, std::ostream& err) {
  if (!(cfg.horizon_days > 0) || !std::isfinite(cfg.horizon_days))
    throw InputError("--horizon-days must be > 0");
  const double t = required_threshold(cfg);
  std::vector<double> updates;
  if (cfg.update_file) updates = read_update_file(*cfg.update_file);

  const auto in = load_input(cfg, err);
  const auto process = build_process(in.series, t);
  const auto checks = iid_checks(process);
  const auto prior = prior_from_process(process);
  const auto posterior = update(prior, updates);
  const auto result = forecast(posterior, cfg.horizon_days);

  const std::array<GammaPosterior, 2> both{prior, posterior};
  const auto grid = rate_grid(both);

  ArtifactWriter out(cfg, "forecast");
  json pj = to_json(process);
  pj["qq"] = to_json(checks.qq);
  if (checks.acf) {
    pj["acf"] = to_json(*checks.acf);
    pj["acf_fraction_inside"] = acf_fraction_inside(*checks.acf);
  } else {
    pj["acf"] = nullptr;
    pj["acf_error"] = checks.acf_error;
  }
  out.write_json("process.json", pj);
  out.write_series("process.qq.csv", checks.qq);
  if (checks.acf) out.write_series("process.acf.csv", *checks.acf);

  json fj = input_summary(cfg, in);
  fj["threshold"] = t;
  fj["prior"] = to_json(prior);
  fj["posterior"] = to_json(posterior);
  fj["prior_predictive_mean"] = prior.params.alpha * cfg.horizon_days / prior.params.beta;
  fj["mean_waiting_time"] = mean_waiting_time(posterior);
  fj["update_interarrivals"] = updates;
  const json rj = to_json(result);
  for (const auto& [k, v] : rj.items()) fj[k] = v;
  out.write_json("forecast.json", fj);
  out.write("forecast.pmf.csv", [&](std::ostream& os) { write_pmf_csv(os, result); });
  out.write_series("forecast.prior_density.csv", posterior_density_series(prior, grid, "prior_density"));
  out.write_series("forecast.posterior_density.csv", posterior_density_series(posterior, grid));
  out.finish();
  return kExitOk;
}

int do_ingest_check(const RunConfig& cfg, std::ostream& err) {
  const auto in = load_input(cfg, err);
  const auto cumulative = cumulative_weekly(in.weeks);

  ArtifactWriter out(cfg, "ingest-check");
  out.write("ingest-check.weekly.csv", [&](std::ostream& os) {
    os << "week,count,cumulative,factor\n";
    for (std::size_t i = 0; i < in.weeks.size(); ++i)
      os << in.weeks[i].week_index << ',' << in.weeks[i].count << ',' << cumulative[i].second << ','
         << format_number(in.plan ? in.plan->factors[i] : 1.0) << '\n';
  });
  out.write("ingest-check.series.csv", [&](std::ostream& os) { write_events_csv(os, in.series); });

  json summary = input_summary(cfg, in);
  summary["weeks"] = in.weeks.size();
  summary["origin"] = in.series.origin();
  summary["last_timestamp"] = in.series.last_timestamp();
  json issues = json::array();
  for (const auto& r : in.parsed.malformed) issues.push_back({{"line", r.line}, {"message", r.message}});
  summary["malformed"] = std::move(issues);
  out.write_json("summary.json", summary);
  out.finish();
  return kExitOk;
}

}  // namespace

std::optional<RescaleMode> parse_rescale_option(const std::string& s) {
  if (s == "none") return std::nullopt;
  return parse_rescale_mode(s);
}

std::vector<double> read_update_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open update file '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = detail::trim(line);
    if (field.empty()) continue;
    const auto v = detail::parse_double(field);
    if (!v || !(*v > 0) || !std::isfinite(*v))
      throw InputError("update file line " + std::to_string(line_no) + ": expected a positive number of days");
    out.push_back(*v);
  }
  return out;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& err) {
  return run_guarded([&] { return do_diagnose(cfg, err); }, err);
}

int cmd_fit(const RunConfig& cfg, std::ostream& err) {
  return run_guarded([&] { return do_fit(cfg, err); }, err);
}

int cmd_forecast(const RunConfig& cfg, std::ostream& err) {
  return run_guarded([&] { return do_forecast(cfg, err); }, err);
}

int cmd_ingest_check(const RunConfig& cfg, std::ostream& err) {
  return run_guarded([&] { return do_ingest_check(cfg, err); }, err);
}

}  // namespace tailcast::cli
