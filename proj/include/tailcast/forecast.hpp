// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tailcast/diagnostics.hpp"
#include "tailcast/distributions.hpp"
#include "tailcast/error.hpp"
#include "tailcast/format.hpp"
#include "tailcast/process.hpp"

namespace tailcast {

enum class Provenance { prior, updated };

inline const char* to_string(Provenance p) { return p == Provenance::prior ? "prior" : "updated"; }

/// Gamma state of the Poisson rate (shape alpha, rate beta in days).
struct GammaPosterior {
  GammaParams params;
  std::size_t n_updates = 0;
  Provenance provenance = Provenance::prior;
};

/// Prior with beta / alpha equal to the mean interarrival: (alpha, beta) = (n, sum z).
inline GammaPosterior prior_from_interarrivals(std::span<const double> interarrivals) {
  if (interarrivals.size() < 2)
    throw InsufficientDataError("prior requires at least 2 interarrivals, got " +
                                std::to_string(interarrivals.size()));
  double total = 0;
  for (double z : interarrivals) {
    if (!(z >= 0) || !std::isfinite(z)) throw InputError("interarrival times must be finite and >= 0");
    total += z;
  }
  if (!(total > 0)) throw DegenerateInputError("interarrival times sum to zero");
  GammaPosterior g{{static_cast<double>(interarrivals.size()), total}, 0, Provenance::prior};
  g.params.validate();
  return g;
}

inline GammaPosterior prior_from_process(const ExceedanceProcess& p) {
  return prior_from_interarrivals(p.interarrivals);
}

/// Conjugate update with k new interarrivals: Gamma(alpha + k, beta + sum z).
/// An empty update returns `g` unchanged.
inline GammaPosterior update(const GammaPosterior& g, std::span<const double> new_interarrivals) {
  if (new_interarrivals.empty()) return g;
  double total = 0;
  for (double z : new_interarrivals) {
    if (!(z > 0) || !std::isfinite(z)) throw InputError("new interarrival times must be finite and > 0");
    total += z;
  }
  GammaPosterior out = g;
  out.params.alpha += static_cast<double>(new_interarrivals.size());
  out.params.beta += total;
  out.n_updates += new_interarrivals.size();
  out.provenance = Provenance::updated;
  return out;
}

/// Mean waiting time beta / alpha: the reciprocal of the posterior mean rate.
inline double mean_waiting_time(const GammaPosterior& g) {
  g.params.validate();
  return g.params.beta / g.params.alpha;
}

inline constexpr double kPredictiveCoverage = 1.0 - 1e-6;

struct ForecastResult {
  double horizon_days = 0;
  double predictive_mean = 0;
  double predictive_variance = 0;
  std::vector<double> pmf;  // pmf[n] = Pr(N(theta) = n)
  double coverage = 0;      // sum of pmf
  std::size_t credible_low = 0;
  std::size_t credible_high = 0;
  GammaParams params;
};

/// Posterior predictive of the count over `theta_days`: the Gamma-Poisson
/// (negative binomial) mixture, truncated once the cumulative mass reaches
/// 1 - 1e-6 (hard cap: mean + 50 sd). credible_low/high bound the equal-tailed
/// interval with at least 90% predictive mass.
inline ForecastResult forecast(const GammaPosterior& g, double theta_days) {
  g.params.validate();
  if (!(theta_days > 0) || !std::isfinite(theta_days)) throw InputError("forecast horizon must be > 0");
  const double a = g.params.alpha, b = g.params.beta;
  ForecastResult r;
  r.horizon_days = theta_days;
  r.params = g.params;
  r.predictive_mean = a * theta_days / b;
  r.predictive_variance = r.predictive_mean * (1 + theta_days / b);
  const double cap = r.predictive_mean + 50 * std::sqrt(r.predictive_variance);

  double cdf = 0;
  bool low_set = false, high_set = false;
  for (std::uint64_t n = 0;; ++n) {
    const double p = negbinom_pmf(g.params, theta_days, n);
    r.pmf.push_back(p);
    cdf += p;
    if (!low_set && cdf > 0.05) {
      r.credible_low = n;
      low_set = true;
    }
    if (!high_set && cdf >= 0.95) {
      r.credible_high = n;
      high_set = true;
    }
    if ((cdf >= kPredictiveCoverage && high_set) || static_cast<double>(n) >= cap) break;
  }
  if (!high_set) r.credible_high = r.pmf.size() - 1;
  r.coverage = cdf;
  return r;
}

/// Gamma density of the rate on `grid`, with the mean and mode as scalars.
inline DiagnosticSeries posterior_density_series(const GammaPosterior& g, std::span<const double> grid,
                                                 std::string name = "posterior_density") {
  g.params.validate();
  if (grid.empty()) throw InputError("density grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) throw InputError("density grid points must be finite and > 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("density grid must be strictly increasing");
  }
  DiagnosticSeries s{std::move(name), {}, {}, {}, {}};
  s.points.reserve(grid.size());
  for (double x : grid) s.points.push_back({x, gamma_pdf(g.params, x)});
  const auto [mean, var] = gamma_summary(g.params);
  s.scalars["mean"] = mean;
  s.scalars["variance"] = var;
  s.scalars["alpha"] = g.params.alpha;
  s.scalars["beta"] = g.params.beta;
  if (g.params.alpha >= 1) s.scalars["mode"] = (g.params.alpha - 1) / g.params.beta;
  return s;
}

/// `points` equally spaced rates covering mean +/- 6 sd of every posterior given.
inline std::vector<double> rate_grid(std::span<const GammaPosterior> posteriors, std::size_t points = 401) {
  if (posteriors.empty() || points < 2) throw InputError("rate grid needs posteriors and >= 2 points");
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& g : posteriors) {
    const auto [mean, var] = gamma_summary(g.params);
    lo = std::min(lo, mean - 6 * std::sqrt(var));
    hi = std::max(hi, mean + 6 * std::sqrt(var));
  }
  lo = std::max(lo, hi * 1e-6);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

inline json to_json(const GammaPosterior& g) {
  const auto [mean, var] = gamma_summary(g.params);
  return {{"alpha", g.params.alpha},
          {"beta", g.params.beta},
          {"mean", mean},
          {"variance", var},
          {"n_updates", g.n_updates},
          {"provenance", to_string(g.provenance)}};
}

inline json to_json(const ForecastResult& r) {
  return {{"horizon_days", r.horizon_days},
          {"predictive_mean", r.predictive_mean},
          {"predictive_variance", r.predictive_variance},
          {"credible_90", {r.credible_low, r.credible_high}},
          {"coverage", r.coverage},
          {"alpha", r.params.alpha},
          {"beta", r.params.beta},
          {"pmf", r.pmf}};
}

/// `n,probability` rows.
inline void write_pmf_csv(std::ostream& os, const ForecastResult& r) {
  os << "n,probability\n";
  for (std::size_t n = 0; n < r.pmf.size(); ++n) os << n << ',' << format_number(r.pmf[n]) << '\n';
}

}  // namespace tailcast
