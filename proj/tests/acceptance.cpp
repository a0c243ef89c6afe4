// Apache License, Version 2.0, refer to LICENSE.txt
//
// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "quadrature.hpp"
#include "support.hpp"

using namespace tailcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

const GpdParams kReferenceGpd{0.77, 8750.0, 1e4};

Outcome bayes_worked_example() {
  const GammaParams prior{38, 702};
  const auto post = update(GammaPosterior{prior, 0, Provenance::prior}, std::vector<double>{60}).params;
  const auto a = gamma_summary(prior), b = gamma_summary(post);
  const bool ok = std::abs(a.mean - 0.054131) <= 1e-6 && std::abs(a.variance - 7.7105e-5) <= 1e-9 &&
                  post == GammaParams{39, 762} && std::abs(b.mean - 0.051181) <= 1e-6 &&
                  std::abs(b.variance - 6.7166e-5) <= 1e-9;
  return {ok, "prior mean " + fmt("%.7f", a.mean) + " var " + fmt("%.5e", a.variance) + "; posterior Gamma(" +
                  fmt("%g", post.alpha) + ", " + fmt("%g", post.beta) + ") mean " + fmt("%.7f", b.mean) + " var " +
                  fmt("%.5e", b.variance)};
}

Outcome forecast_means() {
  const GammaPosterior prior{{38, 702}, 0, Provenance::prior};
  const auto post = update(prior, std::vector<double>{60});
  const double m0 = forecast(prior, 365).predictive_mean;
  const double m1 = forecast(post, 365).predictive_mean;
  const double w = mean_waiting_time(post);
  const bool ok = std::abs(m0 - 19.758) <= 0.01 && std::abs(m1 - 18.681) <= 0.01 && std::abs(w - 19.538) <= 0.01;
  return {ok, "prior E[N] " + fmt("%.4f", m0) + ", posterior E[N] " + fmt("%.4f", m1) + ", waiting " + fmt("%.4f", w)};
}

Outcome predictive_vs_quadrature() {
  double worst = 0;
  std::string where;
  for (double alpha : {0.5, 2.0, 38.0, 39.0})
    for (double beta : {1.0, 10.0, 702.0, 762.0})
      for (double theta : {1.0, 30.0, 365.0})
        for (std::uint64_t n = 0; n <= 60; ++n) {
          const GammaParams g{alpha, beta};
          const double err = std::abs(negbinom_pmf(g, theta, n) - fixtures::gamma_poisson_quadrature(g, theta, n));
          if (!(err <= worst)) {
            worst = err;
            where = "a=" + fmt("%g", alpha) + " b=" + fmt("%g", beta) + " theta=" + fmt("%g", theta) +
                    " n=" + std::to_string(n);
          }
        }
  return {worst <= 1e-6, "max abs error " + fmt("%.3e", worst) + " at " + where};
}

Outcome gpd_recovery() {
  int covered = 0, fitted = 0;
  double se_sum = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto x = gpd_sample(kReferenceGpd, 5000, derive_seed(4001, r));
    try {
      const auto f = gpd_mle(x, kReferenceGpd.threshold);
      ++fitted;
      se_sum += f.se_xi;
      if (std::abs(f.xi - kReferenceGpd.xi) <= 3 * f.se_xi) ++covered;
    } catch (const FitError&) {
    }
  }
  const double mean_se = fitted ? se_sum / fitted : 0;
  const double target = 0.0220 * std::sqrt(6408.0 / 5000.0);
  const bool ok = covered >= 95 && mean_se >= target / 2 && mean_se <= target * 2;
  return {ok, std::to_string(covered) + "/100 covered, mean se_xi " + fmt("%.4f", mean_se) + " vs " +
                  fmt("%.4f", target)};
}

Outcome threshold_stability() {
  const auto x = gpd_sample(kReferenceGpd, 20000, 5001);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double lo = 1e300, hi = -1e300, se2 = 0;
  std::string list;
  for (double q : {0.5, 0.8, 0.9, 0.95}) {
    const double t = sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size()))];
    const auto f = gpd_mle(exceedances(x, t), t);
    lo = std::min(lo, f.xi);
    hi = std::max(hi, f.xi);
    se2 += f.se_xi * f.se_xi;
    list += fmt(" %.3f", f.xi);
  }
  const double pooled = std::sqrt(se2 / 4);
  return {hi - lo < 4 * pooled,
          "xi" + list + ", spread " + fmt("%.4f", hi - lo) + " vs 4*pooled se " + fmt("%.4f", 4 * pooled)};
}

Outcome estimator_sanity() {
  const std::size_t n = 100000;
  const auto x = fixtures::pareto_sample(n, 4.0 / 3.0, 6001);
  const double lo_tau = static_cast<double>(n) / 50, hi_tau = static_cast<double>(n) / 5;
  double hmin = 1e300, hmax = -1e300, pmin = 1e300, pmax = -1e300;
  for (const auto& p : hill_curve(x).points)
    if (p.x >= lo_tau && p.x <= hi_tau) hmin = std::min(hmin, p.y), hmax = std::max(hmax, p.y);
  for (const auto& p : pickands_curve(x).points)
    if (p.x >= lo_tau && p.x <= hi_tau) pmin = std::min(pmin, p.y), pmax = std::max(pmax, p.y);
  const bool ok = hmin >= 0.70 && hmax <= 0.80 && pmin > 0.5 && pmax < 1.0;
  return {ok, "Hill in [" + fmt("%.4f", hmin) + ", " + fmt("%.4f", hmax) + "], Pickands in [" + fmt("%.4f", pmin) +
                  ", " + fmt("%.4f", pmax) + "] over tau in [2000, 20000]"};
}

Outcome poisson_pipeline() {
  // Base arrivals at 5/day with Exp(1) marks; exceeding ln(5/0.0541) thins them to 0.0541/day.
  const double lambda = 0.0541, base = 5.0, days = 700;
  Rng rng(2017);
  std::vector<EventRecord> records;
  for (double t = rng.exponential(base); t <= days; t += rng.exponential(base))
    records.push_back({1.4e9 + t * kSecondsPerDay, rng.exponential(1.0)});
  const auto p = build_process(EventSeries(std::move(records)), std::log(base / lambda));
  const double n = static_cast<double>(p.interarrivals.size());
  const auto checks = iid_checks(p);
  const double slope = checks.qq.scalars.at("slope");
  const double inside = checks.acf ? acf_fraction_inside(*checks.acf) : 0.0;
  const bool rate_ok = std::abs(p.rate_hat - lambda) <= 3 * lambda / std::sqrt(n);
  const bool slope_ok = std::abs(slope * lambda - 1) <= 0.10;
  const bool acf_ok = inside >= 0.9;
  return {rate_ok && slope_ok && acf_ok,
          "n " + fmt("%g", n) + ", rate " + fmt("%.5f", p.rate_hat) + (rate_ok ? " ok" : " off") + ", Q-Q slope " +
              fmt("%.3f", slope) + " vs " + fmt("%.3f", 1 / lambda) + (slope_ok ? " ok" : " off") +
              ", ACF inside " + fmt("%.3f", inside) + (acf_ok ? " ok" : " off")};
}

Outcome records_law() {
  const std::size_t n = 1000, trials = 500;
  const double h = records_moments(n).first;
  double sum = 0, sum2 = 0;
  int violated = 0;
  Rng rng(8001);
  for (std::size_t k = 0; k < trials; ++k) {
    std::vector<double> iid(n), trend(n);
    for (auto& v : iid) v = rng.uniform();
    const double c = static_cast<double>(count_records(iid));
    sum += c;
    sum2 += c * c;
    for (std::size_t i = 0; i < n; ++i) trend[i] = 0.01 * static_cast<double>(i + 1) + rng.normal();
    if (!records_analysis(trend).within_band_at_end()) ++violated;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sum2 - trials * mean * mean) / (trials - 1));
  const double mcse = sd / std::sqrt(static_cast<double>(trials));
  const bool ok = std::abs(mean - h) <= 2 * mcse && violated >= 475;
  return {ok, "mean records " + fmt("%.3f", mean) + " vs H " + fmt("%.3f", h) + " (2 MC SE " + fmt("%.3f", 2 * mcse) +
                  "), trend violations " + std::to_string(violated) + "/500"};
}

Outcome moment_diagnostics() {
  const std::size_t n = 100000;
  std::vector<double> finals;
  int often = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto x = gpd_sample(kReferenceGpd, n, derive_seed(9001, r));
    finals.push_back(max_sum_ratio(x, 1.0).points.back().y);
    const auto r2 = max_sum_ratio(x, 2.0);
    const bool late_excursion = std::any_of(r2.points.begin() + static_cast<std::ptrdiff_t>(n / 2), r2.points.end(),
                                            [](const DiagnosticPoint& p) { return p.y > 0.2; });
    if (late_excursion) ++often;
  }
  std::nth_element(finals.begin(), finals.begin() + 10, finals.end());
  const double median = finals[10];
  return {median < 0.05 && often >= 15, "median R_n(1) " + fmt("%.4f", median) + ", R_n(2) > 0.2 in second half for " +
                                            std::to_string(often) + "/20 reseeds"};
}

Outcome gof_calibration() {
  const std::size_t trials = 200, n = 500;
  int reject_null = 0, reject_alt = 0;
  for (std::uint64_t k = 0; k < trials; ++k) {
    const GpdParams null_model{0.3, 1.0, 0.0};
    const auto x = gpd_sample(null_model, n, derive_seed(10001, k));
    if (bootstrap_gof(x, 0.0, 199, derive_seed(10002, k)).p_value < 0.05) ++reject_null;

    Rng rng(derive_seed(10003, k));
    std::vector<double> y;
    while (y.size() < n) {
      const double v = std::exp(rng.normal());
      if (v < std::exp(2.0)) y.push_back(v);
    }
    if (bootstrap_gof(y, 0.0, 199, derive_seed(10004, k)).p_value < 0.05) ++reject_alt;
  }
  const double size = reject_null / static_cast<double>(trials), power = reject_alt / static_cast<double>(trials);
  return {size >= 0.02 && size <= 0.10 && power > 0.5,
          "size " + fmt("%.3f", size) + ", power vs truncated lognormal " + fmt("%.3f", power)};
}

Outcome tail_statistics() {
  const std::vector<double> hand{100, 300, 500};
  const auto h = conditional_tail_stats(hand, 150);
  const GpdParams g{0.3, 1.0, 0.0};
  const auto x = gpd_sample(g, 100000, 11001);
  const double t = gpd_quantile(g, 0.9);
  const auto s = conditional_tail_stats(x, t);
  const double analytic = t + (g.beta + g.xi * (t - g.threshold)) / (1 - g.xi);
  const double rel = std::abs(s.tail_mean / analytic - 1);
  return {h.tail_mean == 400 && h.tail_mad == 100 && rel <= 0.05,
          "hand " + fmt("%g", h.tail_mean) + "/" + fmt("%g", h.tail_mad) + ", GPD tail mean " +
              fmt("%.4f", s.tail_mean) + " vs " + fmt("%.4f", analytic) + " (rel " + fmt("%.4f", rel) + ")"};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = fixtures::slurp(e.path());
  return out;
}

Outcome cli_determinism() {
  const auto dir = fixtures::scratch_dir("acceptance_cli");
  const auto input = dir / "events.csv";
  {
    const auto mags = gpd_sample(GpdParams{0.5, 10.0, 1.0}, 3000, 12001);
    Rng clock(12002);
    std::ofstream out(input);
    out << "timestamp,shares\n";
    double t = 1.3e9;
    for (double m : mags) {
      t += std::round(clock.exponential(3.0) * kSecondsPerDay);
      out << format_number(t) << "," << format_number(m) << "\n";
    }
  }
  const std::vector<std::string> runs{"diagnose", "fit --threshold 20", "forecast --threshold 50",
                                      "ingest-check --rescale max"};
  std::string detail;
  bool ok = true;
  for (const auto& args : runs) {
    std::map<std::string, std::string> trees[2];
    for (int k = 0; k < 2; ++k) {
      const auto out = dir / ("run" + std::to_string(k));
      fs::remove_all(out);
      const std::string cmd = std::string(TAILCAST_CLI_PATH) + " " + args + " --input " + input.string() + " --out " +
                              out.string() + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ok = false;
      trees[k] = read_tree(out);
    }
    const bool same = !trees[0].empty() && trees[0] == trees[1];
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + args.substr(0, args.find(' ')) + " " + std::to_string(trees[0].size()) +
              " files " + (same ? "identical" : "DIFFER");
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  double budget_ms;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, 1, bayes_worked_example},     {2, 10, forecast_means},        {3, 5e3, predictive_vs_quadrature},
      {4, 60e3, gpd_recovery},          {5, 30e3, threshold_stability}, {6, 30e3, estimator_sanity},
      {7, 10e3, poisson_pipeline},      {8, 30e3, records_law},         {9, 30e3, moment_diagnostics},
      {10, 600e3, gof_calibration},     {11, 5e3, tail_statistics},     {12, 60e3, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o{false, ""};
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = ms < c.budget_ms;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %d: %s [%.3f ms, budget %g ms%s]\n", pass ? "PASS" : "FAIL", c.id, o.detail.c_str(), ms,
                c.budget_ms, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
