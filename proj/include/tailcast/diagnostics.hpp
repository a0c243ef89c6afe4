// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/error.hpp"
#include "tailcast/format.hpp"

namespace tailcast {

//------------------------------------------------------------------------
// Plot-data carrier
//------------------------------------------------------------------------

struct DiagnosticPoint {
  double x;
  double y;
};

struct DiagnosticBand {
  double x;
  double low;
  double high;
};

/// Named (x, y) curve with optional confidence bands aligned 1:1 with the
/// points, named scalar annotations, and free-form flags for points that were
/// omitted or are degenerate.
struct DiagnosticSeries {
  std::string name;
  std::vector<DiagnosticPoint> points;
  std::vector<DiagnosticBand> bands;
  std::map<std::string, double> scalars;
  std::vector<std::string> flags;

  bool has_bands() const noexcept { return !bands.empty(); }
  bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

/// CSV with header `x,y` or `x,y,low,high`.
inline void write_csv(std::ostream& os, const DiagnosticSeries& s) {
  const bool bands = s.has_bands();
  os << (bands ? "x,y,low,high\n" : "x,y\n");
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    os << format_number(s.points[i].x) << ',' << format_number(s.points[i].y);
    if (bands) os << ',' << format_number(s.bands[i].low) << ',' << format_number(s.bands[i].high);
    os << '\n';
  }
}

inline json to_json(const DiagnosticSeries& s) {
  json j;
  j["name"] = s.name;
  j["points"] = json::array();
  for (const auto& p : s.points) j["points"].push_back({p.x, p.y});
  if (s.has_bands()) {
    j["bands"] = json::array();
    for (const auto& b : s.bands) j["bands"].push_back({b.x, b.low, b.high});
  }
  j["scalars"] = json::object();
  for (const auto& [k, v] : s.scalars) j["scalars"][k] = v;
  j["flags"] = s.flags;
  return j;
}

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  return v;
}

inline std::vector<double> sorted_descending(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

inline void require_finite_values(std::span<const double> xs, const char* what) {
  for (double x : xs)
    if (!std::isfinite(x)) throw InputError(std::string(what) + ": values must be finite");
}

}  // namespace detail

//------------------------------------------------------------------------
// Records
//------------------------------------------------------------------------

struct RecordsResult {
  /// (n, records among the first n observations)
  std::vector<std::pair<std::size_t, std::size_t>> trajectory;
  /// (n, H_n)
  std::vector<std::pair<std::size_t, double>> expected;
  std::vector<DiagnosticBand> band95;

  std::size_t record_count() const { return trajectory.empty() ? 0 : trajectory.back().second; }

  /// True when the final record count lies inside its 95% band.
  bool within_band_at_end() const {
    if (trajectory.empty()) return false;
    const double r = static_cast<double>(record_count());
    return r >= band95.back().low && r <= band95.back().high;
  }

  DiagnosticSeries as_series(std::string name = "records") const {
    DiagnosticSeries s{std::move(name), {}, band95, {}, {}};
    s.points.reserve(trajectory.size());
    for (const auto& [n, r] : trajectory) s.points.push_back({static_cast<double>(n), static_cast<double>(r)});
    if (!expected.empty()) s.scalars["expected_final"] = expected.back().second;
    s.scalars["records_final"] = static_cast<double>(record_count());
    return s;
  }
};

/// Harmonic number H_n and Var(records) = sum 1/i - 1/i^2 for iid data.
inline std::pair<double, double> records_moments(std::size_t n) {
  double h = 0, v = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double inv = 1.0 / static_cast<double>(i);
    h += inv;
    v += inv - inv * inv;
  }
  return {h, v};
}

/// Number of records (strict new maxima) in `xs`. The first observation is a record.
inline std::size_t count_records(std::span<const double> xs) {
  std::size_t count = 0;
  double best = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i == 0 || xs[i] > best) {
      best = xs[i];
      ++count;
    }
  }
  return count;
}

/// Records trajectory with its iid expectation H_n and a normal-approximation
/// 95% band H_n +/- 1.96 sd, clipped below at 1.
inline RecordsResult records_analysis(std::span<const double> xs) {
  if (xs.empty()) throw InputError("records analysis requires at least one observation");
  detail::require_finite_values(xs, "records analysis");
  RecordsResult out;
  const std::size_t n = xs.size();
  out.trajectory.reserve(n);
  out.expected.reserve(n);
  out.band95.reserve(n);
  std::size_t count = 0;
  double best = 0, h = 0, var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || xs[i] > best) {
      best = xs[i];
      ++count;
    }
    const double inv = 1.0 / static_cast<double>(i + 1);
    h += inv;
    var += inv - inv * inv;
    const double half = 1.96 * std::sqrt(var);
    out.trajectory.emplace_back(i + 1, count);
    out.expected.emplace_back(i + 1, h);
    out.band95.push_back({static_cast<double>(i + 1), std::max(1.0, h - half), h + half});
  }
  return out;
}

//------------------------------------------------------------------------
// Moments and distribution shape
//------------------------------------------------------------------------

/// Running Maximum/Sum ratio R_n(p) = max_{i<=n} x_i^p / sum_{i<=n} x_i^p.
/// Prefixes whose sum is zero are omitted.
inline DiagnosticSeries max_sum_ratio(std::span<const double> xs, double p) {
  if (!(p > 0)) throw InputError("max/sum ratio order p must be > 0");
  detail::require_finite_values(xs, "max/sum ratio");
  if (std::any_of(xs.begin(), xs.end(), [](double x) { return x < 0; }))
    throw InputError("max/sum ratio requires nonnegative values");
  if (std::none_of(xs.begin(), xs.end(), [](double x) { return x > 0; }))
    throw DegenerateInputError("max/sum ratio undefined: all values are zero");

  DiagnosticSeries s{"maxsum", {}, {}, {{"p", p}}, {}};
  s.points.reserve(xs.size());
  double mx = 0, sum = 0;
  std::size_t omitted = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = std::pow(xs[i], p);
    mx = std::max(mx, v);
    sum += v;
    if (sum > 0) {
      s.points.push_back({static_cast<double>(i + 1), mx / sum});
    } else {
      ++omitted;
    }
  }
  if (omitted) s.flags.push_back("omitted " + std::to_string(omitted) + " all-zero prefixes");
  return s;
}

/// Empirical survival fraction #{x_i > v} / n at each distinct sample value.
/// The last point (the maximum) has y = 0 and is flagged for log-log plots.
inline DiagnosticSeries empirical_ccdf(std::span<const double> xs) {
  if (xs.empty()) throw InputError("empirical CCDF requires at least one observation");
  detail::require_finite_values(xs, "empirical CCDF");
  const auto v = detail::sorted_copy(xs);
  const double n = static_cast<double>(v.size());
  DiagnosticSeries s{"ccdf", {}, {}, {}, {}};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    s.points.push_back({v[i], static_cast<double>(v.size() - i - 1) / n});
  }
  s.flags.push_back("zero_tail_point");
  return s;
}

/// Step-function evaluation of the empirical CCDF at an arbitrary v.
inline double ccdf_at(std::span<const double> xs, double v) {
  if (xs.empty()) throw InputError("empirical CCDF requires at least one observation");
  const auto above = std::count_if(xs.begin(), xs.end(), [v](double x) { return x > v; });
  return static_cast<double>(above) / static_cast<double>(xs.size());
}

//------------------------------------------------------------------------
// Mean excess
//------------------------------------------------------------------------

/// e_n(t) = sum_{x_i > t} (x_i - t) / #{x_i > t}. Thresholds without
/// exceedances are omitted; output is sorted by threshold.
inline DiagnosticSeries mean_excess(std::span<const double> xs, std::span<const double> thresholds) {
  if (thresholds.empty()) throw InputError("mean excess requires at least one threshold");
  if (xs.empty()) throw InputError("mean excess requires observations");
  detail::require_finite_values(xs, "mean excess");
  const auto v = detail::sorted_copy(xs);
  // suffix[i] = sum of v[i..]
  std::vector<double> suffix(v.size() + 1, 0.0);
  for (std::size_t i = v.size(); i-- > 0;) suffix[i] = suffix[i + 1] + v[i];

  auto ts = detail::sorted_copy(thresholds);
  DiagnosticSeries s{"mef", {}, {}, {}, {}};
  std::size_t omitted = 0;
  for (double t : ts) {
    const auto first = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
    const std::size_t k = v.size() - first;
    if (k == 0) {
      ++omitted;
      continue;
    }
    s.points.push_back({t, suffix[first] / static_cast<double>(k) - t});
  }
  if (omitted) s.flags.push_back("omitted " + std::to_string(omitted) + " thresholds without exceedances");
  return s;
}

/// Sample quantile by the order statistic at floor(q (n - 1)).
inline double order_quantile(const std::vector<double>& sorted, double q) {
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  return sorted[std::min(idx, sorted.size() - 1)];
}

/// Default MEF grid: distinct sample values from the 50th to the 99.5th percentile.
inline std::vector<double> default_mef_thresholds(std::span<const double> xs) {
  if (xs.empty()) throw InputError("threshold grid requires observations");
  const auto v = detail::sorted_copy(xs);
  const double lo = order_quantile(v, 0.5);
  const double hi = order_quantile(v, 0.995);
  std::vector<double> out;
  for (double x : v)
    if (x >= lo && x <= hi && (out.empty() || out.back() != x)) out.push_back(x);
  return out;
}

struct LinearOnset {
  double onset;  // first threshold of the linear region
  double slope;
  double intercept;
  double r_squared;
  std::size_t n_points;
};

namespace detail {

inline LinearOnset ols(std::span<const DiagnosticPoint> pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  const double r2 = (sxx > 0 && syy > 0) ? sxy * sxy / (sxx * syy) : 0.0;
  return {pts.front().x, slope, my - slope * mx, r2, pts.size()};
}

}  // namespace detail

/// Suggests where the MEF becomes linear: the lowest grid onset from which an
/// OLS line through the remaining points has positive slope and R^2 >= min_r2.
/// Onsets are scanned in steps of 2% of the grid.
inline std::optional<LinearOnset> mef_linear_onset(const DiagnosticSeries& mef, double min_r2 = 0.9,
                                                   std::size_t min_points = 10) {
  const auto& pts = mef.points;
  if (pts.size() < min_points) return std::nullopt;
  const std::size_t step = std::max<std::size_t>(1, pts.size() / 50);
  for (std::size_t k = 0; k + min_points <= pts.size(); k += step) {
    const auto fit = detail::ols(std::span(pts).subspan(k));
    if (fit.slope > 0 && fit.r_squared >= min_r2) return fit;
  }
  return std::nullopt;
}

//------------------------------------------------------------------------
// Tail-index estimators
//------------------------------------------------------------------------

/// Hill estimates (1/tau) sum_{j<=tau} ln X_(j) - ln X_(tau) for tau = 2..n-1,
/// X_(1) >= X_(2) >= ... the upper order statistics. x = tau.
inline DiagnosticSeries hill_curve(std::span<const double> xs) {
  if (xs.size() < 2) throw InputError("Hill estimator requires at least two observations");
  for (double x : xs)
    if (!(x > 0) || !std::isfinite(x)) throw InputError("Hill estimator requires finite positive values");
  const auto v = detail::sorted_descending(xs);
  DiagnosticSeries s{"hill", {}, {}, {}, {}};
  s.points.reserve(v.size());
  double cum = std::log(v[0]);
  for (std::size_t tau = 2; tau < v.size(); ++tau) {
    const double log_x = std::log(v[tau - 1]);
    cum += log_x;
    s.points.push_back({static_cast<double>(tau), cum / static_cast<double>(tau) - log_x});
  }
  return s;
}

/// Pickands estimates (1/ln 2) ln[(X_(tau) - X_(2tau)) / (X_(2tau) - X_(4tau))]
/// for tau = 1..floor(n/4). tau with a zero spacing are omitted and counted
/// in the scalar `omitted`.
inline DiagnosticSeries pickands_curve(std::span<const double> xs) {
  if (xs.size() < 4) throw InputError("Pickands estimator requires at least four observations");
  detail::require_finite_values(xs, "Pickands estimator");
  const auto v = detail::sorted_descending(xs);
  DiagnosticSeries s{"pickands", {}, {}, {}, {}};
  const std::size_t max_tau = v.size() / 4;
  std::size_t omitted = 0;
  for (std::size_t tau = 1; tau <= max_tau; ++tau) {
    const double num = v[tau - 1] - v[2 * tau - 1];
    const double den = v[2 * tau - 1] - v[4 * tau - 1];
    if (num <= 0 || den <= 0) {
      ++omitted;
      continue;
    }
    s.points.push_back({static_cast<double>(tau), std::log(num / den) / std::numbers::ln2});
  }
  s.scalars["omitted"] = static_cast<double>(omitted);
  if (omitted) s.flags.push_back("omitted " + std::to_string(omitted) + " tau with zero spacing");
  return s;
}

//------------------------------------------------------------------------
// Independence and exponentiality
//------------------------------------------------------------------------

/// R-style default lag count: floor(10 log10 n), at most n - 1.
inline std::size_t default_acf_lags(std::size_t n) {
  if (n < 2) return 0;
  const auto lags = static_cast<std::size_t>(std::floor(10.0 * std::log10(static_cast<double>(n))));
  return std::min(lags, n - 1);
}

/// Sample autocorrelation r_k for k = 0..max_lag, with white-noise bands +/- 1.96/sqrt(n).
inline DiagnosticSeries acf(std::span<const double> xs, std::size_t max_lag) {
  const std::size_t n = xs.size();
  if (n < 2) throw InputError("ACF requires at least two observations");
  if (max_lag >= n) throw InputError("ACF max lag must be smaller than the sample size");
  detail::require_finite_values(xs, "ACF");
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - mean;
  double denom = 0;
  for (double v : d) denom += v * v;
  if (!(denom > 0)) throw DegenerateInputError("ACF undefined for zero-variance data");

  const double half = 1.96 / std::sqrt(static_cast<double>(n));
  DiagnosticSeries s{"acf", {}, {}, {{"band", half}}, {}};
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double num = 0;
    for (std::size_t i = 0; i + k < n; ++i) num += d[i] * d[i + k];
    s.points.push_back({static_cast<double>(k), k == 0 ? 1.0 : num / denom});
    s.bands.push_back({static_cast<double>(k), -half, half});
  }
  return s;
}

/// Fraction of lags k >= 1 whose |r_k| lies inside the white-noise band.
inline double acf_fraction_inside(const DiagnosticSeries& a) {
  std::size_t inside = 0, total = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].x == 0) continue;
    ++total;
    if (a.points[i].y >= a.bands[i].low && a.points[i].y <= a.bands[i].high) ++inside;
  }
  return total ? static_cast<double>(inside) / static_cast<double>(total) : 1.0;
}

/// Exponential Q-Q data: points (z_(i), -ln(1 - i/(n+1))).
///
/// Scalars: `slope` is the least-squares slope of data on exponential
/// quantiles through the origin (an estimate of the mean interarrival 1/lambda);
/// `r_squared` measures linearity. Constant input is flagged `degenerate_slope`.
inline DiagnosticSeries exponential_qq(std::span<const double> interarrivals) {
  const std::size_t n = interarrivals.size();
  if (n < 2) throw InputError("exponential Q-Q requires at least two interarrivals");
  detail::require_finite_values(interarrivals, "exponential Q-Q");
  for (double z : interarrivals)
    if (z < 0) throw InputError("interarrival times must be nonnegative");
  const auto z = detail::sorted_copy(interarrivals);

  DiagnosticSeries s{"exp_qq", {}, {}, {}, {}};
  double sqz = 0, sqq = 0, mean_z = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = -std::log1p(-static_cast<double>(i + 1) / static_cast<double>(n + 1));
    s.points.push_back({z[i], q});
    sqz += q * z[i];
    sqq += q * q;
    mean_z += z[i];
  }
  mean_z /= static_cast<double>(n);
  const double slope = sqz / sqq;
  s.scalars["slope"] = slope;
  double sse = 0, sst = 0;
  for (const auto& p : s.points) {
    sse += (p.x - slope * p.y) * (p.x - slope * p.y);
    sst += (p.x - mean_z) * (p.x - mean_z);
  }
  if (sst > 0) {
    s.scalars["r_squared"] = 1.0 - sse / sst;
  } else {
    s.flags.push_back("degenerate_slope");
  }
  return s;
}

//------------------------------------------------------------------------
// Conditional tail statistics
//------------------------------------------------------------------------

struct TailMeanResult {
  double threshold;
  double mean_excess_value;  // tail_mean - threshold
  double tail_mean;          // E[X | X > t]
  double tail_mad;           // mean |x - tail_mean| over exceedances
  std::size_t n_exceed;
};

/// Conditional tail mean (expected shortfall) above t with mean absolute deviation.
inline TailMeanResult conditional_tail_stats(std::span<const double> xs, double t) {
  detail::require_finite_values(xs, "tail statistics");
  double sum = 0;
  std::size_t k = 0;
  for (double x : xs)
    if (x > t) {
      sum += x;
      ++k;
    }
  if (k == 0) throw InsufficientDataError("no observations exceed the threshold");
  const double mean = sum / static_cast<double>(k);
  double mad = 0;
  for (double x : xs)
    if (x > t) mad += std::abs(x - mean);
  mad /= static_cast<double>(k);
  return {t, mean - t, mean, mad, k};
}

}  // namespace tailcast
