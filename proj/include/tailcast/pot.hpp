// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tailcast/distributions.hpp"
#include "tailcast/error.hpp"
#include "tailcast/format.hpp"
#include "tailcast/random.hpp"

namespace tailcast {

/// Observations strictly above `t`, in their original order.
inline std::vector<double> exceedances(std::span<const double> xs, double t) {
  std::vector<double> out;
  for (double x : xs)
    if (x > t) out.push_back(x);
  return out;
}

/// Minimum number of exceedances accepted by gpd_mle.
inline constexpr std::size_t kMinFitExceedances = 10;

struct GpdFit {
  double threshold = 0;
  double xi = 0;
  double beta = 1;
  double se_xi = 0;
  double se_beta = 0;
  std::size_t n_exceed = 0;
  double loglik = 0;
  bool converged = false;
  std::size_t iterations = 0;

  GpdParams params() const { return {xi, beta, threshold}; }

  /// ML is consistent only for xi > -1/2.
  bool consistent() const noexcept { return xi > -0.5; }
};

/// Optimizer failure. Carries the best iterate reached.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, GpdFit best) : NumericalError(what), best_(best) {}
  const GpdFit& best() const noexcept { return best_; }

 private:
  GpdFit best_;
};

//------------------------------------------------------------------------
// Log-likelihood
//------------------------------------------------------------------------

/// |xi| below this uses a series expansion around the exponential limit.
inline constexpr double kLikelihoodShapeSeries = 1e-6;

/// GPD log-likelihood of a fixed set of exceedances over threshold t,
///
///   l(xi, beta) = -n ln beta - (1 + 1/xi) sum ln(1 + xi y_i / beta),  y_i = x_i - t,
///
/// with analytic gradient and Hessian in (xi, beta).
class GpdLikelihood {
 public:
  GpdLikelihood(std::span<const double> exceedances, double threshold) : threshold_(threshold) {
    if (!std::isfinite(threshold)) throw InputError("threshold must be finite");
    excess_.reserve(exceedances.size());
    for (double x : exceedances) {
      if (!std::isfinite(x)) throw InputError("exceedances must be finite");
      if (!(x > threshold)) throw InputError("every exceedance must lie strictly above the threshold");
      excess_.push_back(x - threshold);
    }
    if (excess_.empty()) throw InsufficientDataError("no exceedances");
    max_excess_ = *std::max_element(excess_.begin(), excess_.end());
    double sum = 0;
    for (double y : excess_) sum += y;
    mean_excess_ = sum / static_cast<double>(excess_.size());
  }

  std::size_t size() const noexcept { return excess_.size(); }
  double threshold() const noexcept { return threshold_; }
  double max_excess() const noexcept { return max_excess_; }
  double mean_excess() const noexcept { return mean_excess_; }
  const std::vector<double>& excesses() const noexcept { return excess_; }

  /// 1 + xi y_i / beta > 0 for every observation.
  bool feasible(double xi, double beta) const noexcept {
    if (!(beta > 0) || !std::isfinite(beta) || !std::isfinite(xi)) return false;
    return xi >= 0 || 1 + xi * max_excess_ / beta > 0;
  }

  /// -inf outside the feasible region.
  double value(double xi, double beta) const noexcept {
    if (!feasible(xi, beta)) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(excess_.size());
    double acc = 0;
    if (std::abs(xi) < kLikelihoodShapeSeries) {
      // -(1 + 1/xi) ln(1 + xi u) = -[u + xi (u - u^2/2) + xi^2 (u^3/3 - u^2/2)] + O(xi^3)
      for (double y : excess_) {
        const double u = y / beta;
        acc += u + xi * (u - 0.5 * u * u) + xi * xi * (u * u * u / 3 - 0.5 * u * u);
      }
    } else {
      for (double y : excess_) acc += std::log1p(xi * y / beta);
      acc *= 1 + 1 / xi;
    }
    return -n * std::log(beta) - acc;
  }

  std::array<double, 2> gradient(double xi, double beta) const {
    const double n = static_cast<double>(excess_.size());
    double sum_log = 0, sum_w = 0, series = 0;
    const bool small = std::abs(xi) < kLikelihoodShapeSeries;
    for (double y : excess_) {
      const double u = y / beta;
      const double d = 1 + xi * u;
      sum_w += u / d;
      if (small) {
        series += (0.5 * u * u - u) - 2 * xi * (u * u * u / 3 - 0.5 * u * u);
      } else {
        sum_log += std::log1p(xi * u);
      }
    }
    const double d_xi = small ? series : sum_log / (xi * xi) - (1 + 1 / xi) * sum_w;
    const double d_beta = -n / beta + (1 + xi) / beta * sum_w;
    return {d_xi, d_beta};
  }

  /// Second derivatives [[l_xixi, l_xibeta], [l_xibeta, l_betabeta]].
  std::array<std::array<double, 2>, 2> hessian(double xi, double beta) const {
    const double n = static_cast<double>(excess_.size());
    const bool small = std::abs(xi) < kLikelihoodShapeSeries;
    double sum_log = 0, sum_w = 0, sum_u2d2 = 0, sum_ud2 = 0, sum_cross = 0, series = 0;
    for (double y : excess_) {
      const double u = y / beta;
      const double d = 1 + xi * u;
      const double d2 = d * d;
      sum_w += u / d;
      sum_ud2 += u / d2;
      sum_u2d2 += u * u / d2;
      sum_cross += u * (1 - u) / d2;
      if (small) {
        const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
        series += (u2 - 2 * u3 / 3) - 6 * xi * (u3 / 3 - u4 / 4);
      } else {
        sum_log += std::log1p(xi * u);
      }
    }
    const double h_xx = small ? series
                              : -2 * sum_log / (xi * xi * xi) + 2 * sum_w / (xi * xi) + (1 + 1 / xi) * sum_u2d2;
    const double h_xb = sum_cross / beta;
    const double h_bb = n / (beta * beta) - (1 + xi) / (beta * beta) * (sum_w + sum_ud2);
    return {{{h_xx, h_xb}, {h_xb, h_bb}}};
  }

 private:
  double threshold_;
  std::vector<double> excess_;
  double max_excess_ = 0;
  double mean_excess_ = 0;
};

//------------------------------------------------------------------------
// Maximum likelihood
//------------------------------------------------------------------------

struct GpdMleOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-8;
  /// Fit the exponential model (xi = 0) instead of the full GPD.
  bool fix_shape_zero = false;
};

struct ShapeScale {
  double xi;
  double beta;
};

/// Probability-weighted-moment estimate of (xi, beta) from excesses.
/// Returns nullopt when the estimate is undefined (requires xi < 1).
inline std::optional<ShapeScale> pwm_estimate(std::span<const double> excess) {
  if (excess.size() < 2) return std::nullopt;
  std::vector<double> y(excess.begin(), excess.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(y.size());
  double a0 = 0, a1 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = (static_cast<double>(i + 1) - 0.35) / n;
    a0 += y[i];
    a1 += (1 - p) * y[i];
  }
  a0 /= n;
  a1 /= n;
  const double denom = a0 - 2 * a1;
  if (!(denom > 0)) return std::nullopt;
  const ShapeScale est{2 - a0 / denom, 2 * a0 * a1 / denom};
  if (!std::isfinite(est.xi) || !(est.beta > 0) || !std::isfinite(est.beta) || est.xi >= 1) return std::nullopt;
  return est;
}

namespace detail {

struct Vec2 {
  double a, b;
};

inline double dot(Vec2 u, Vec2 v) { return u.a * v.a + u.b * v.b; }
inline double inf_norm(Vec2 v) { return std::max(std::abs(v.a), std::abs(v.b)); }

// Objective in (xi, s = ln beta): f = -l / n.
struct ScaledObjective {
  const GpdLikelihood& lik;
  double n;

  double value(Vec2 x) const { return -lik.value(x.a, std::exp(x.b)) / n; }

  Vec2 gradient(Vec2 x) const {
    const double beta = std::exp(x.b);
    const auto g = lik.gradient(x.a, beta);
    return {-g[0] / n, -g[1] * beta / n};
  }

  /// Newton step -H^{-1} g, or nullopt when H is not positive definite.
  std::optional<Vec2> newton_step(Vec2 x, Vec2 g) const {
    const double beta = std::exp(x.b);
    const auto l = lik.hessian(x.a, beta);
    const auto lg = lik.gradient(x.a, beta);
    const double h11 = -l[0][0] / n;
    const double h12 = -beta * l[0][1] / n;
    const double h22 = -(beta * beta * l[1][1] + beta * lg[1]) / n;
    const double det = h11 * h22 - h12 * h12;
    if (!(h11 > 0) || !(det > 0)) return std::nullopt;
    return Vec2{-(h22 * g.a - h12 * g.b) / det, -(h11 * g.b - h12 * g.a) / det};
  }
};

// Gradient norm below which iterations take Newton steps, accepted when the
// gradient norm decreases.
inline constexpr double kNewtonPolishGradient = 1e-5;

inline GpdFit fixed_exponential_fit(const GpdLikelihood& lik) {
  const double n = static_cast<double>(lik.size());
  GpdFit fit;
  fit.threshold = lik.threshold();
  fit.xi = 0;
  fit.beta = lik.mean_excess();
  fit.se_xi = 0;
  fit.se_beta = fit.beta / std::sqrt(n);
  fit.n_exceed = lik.size();
  fit.loglik = -n * std::log(fit.beta) - n;
  fit.converged = true;
  return fit;
}

}  // namespace detail

/// Maximum-likelihood GPD fit to exceedances over `t`.
///
/// BFGS in (xi, ln beta) with backtracking line search; infeasible points
/// (1 + xi y / beta <= 0 for some y) evaluate to +inf and are rejected by the
/// line search. Starts from the PWM estimate, falling back to
/// (0.1, mean excess). Standard errors come from the inverse observed
/// information in (xi, beta). Throws FitError, with the best iterate, when
/// the gradient tolerance is not met within the iteration budget or the
/// information matrix is not positive definite.
inline GpdFit gpd_mle(std::span<const double> exc, double t, const GpdMleOptions& opts = {}) {
  if (exc.size() < kMinFitExceedances)
    throw InsufficientDataError("GPD fit requires at least " + std::to_string(kMinFitExceedances) +
                                " exceedances, got " + std::to_string(exc.size()));
  const GpdLikelihood lik(exc, t);
  if (opts.fix_shape_zero) return detail::fixed_exponential_fit(lik);

  const double n = static_cast<double>(lik.size());
  const detail::ScaledObjective f{lik, n};

  ShapeScale start{0.1, lik.mean_excess()};
  if (auto pwm = pwm_estimate(lik.excesses()); pwm && lik.feasible(pwm->xi, pwm->beta)) start = *pwm;

  detail::Vec2 x{start.xi, std::log(start.beta)};
  double fx = f.value(x);
  detail::Vec2 g = f.gradient(x);
  // inverse Hessian approximation, row-major 2x2
  std::array<double, 4> h{1, 0, 0, 1};
  const auto reset = [&h] { h = {1, 0, 0, 1}; };

  std::size_t iter = 0;
  bool converged = detail::inf_norm(g) < opts.gradient_tolerance;
  while (!converged && iter < opts.max_iterations) {
    ++iter;
    if (detail::inf_norm(g) < detail::kNewtonPolishGradient) {
      if (const auto step = f.newton_step(x, g)) {
        const detail::Vec2 xn{x.a + step->a, x.b + step->b};
        const double fn = f.value(xn);
        if (std::isfinite(fn)) {
          const detail::Vec2 gn = f.gradient(xn);
          if (detail::inf_norm(gn) < detail::inf_norm(g)) {
            x = xn;
            fx = fn;
            g = gn;
            converged = detail::inf_norm(g) < opts.gradient_tolerance;
            continue;
          }
        }
      }
    }
    detail::Vec2 p{-(h[0] * g.a + h[1] * g.b), -(h[2] * g.a + h[3] * g.b)};
    if (detail::dot(p, g) >= 0) {
      reset();
      p = {-g.a, -g.b};
    }
    // cap the step so trial points stay in a sensible region
    const double len = std::hypot(p.a, p.b);
    if (len > 2.0) p = {p.a * 2.0 / len, p.b * 2.0 / len};

    const double slope = detail::dot(p, g);
    double step = 1.0;
    detail::Vec2 xn{};
    double fn = 0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      xn = {x.a + step * p.a, x.b + step * p.b};
      fn = f.value(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h != std::array<double, 4>{1, 0, 0, 1}) {
        reset();
        continue;
      }
      break;
    }

    const detail::Vec2 gn = f.gradient(xn);
    const detail::Vec2 s{xn.a - x.a, xn.b - x.b};
    const detail::Vec2 yv{gn.a - g.a, gn.b - g.b};
    const double sy = detail::dot(s, yv);
    if (sy > 1e-12 * std::hypot(s.a, s.b) * std::hypot(yv.a, yv.b)) {
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      const detail::Vec2 hy{h[0] * yv.a + h[1] * yv.b, h[2] * yv.a + h[3] * yv.b};
      const double yhy = detail::dot(yv, hy);
      const double c = (1 + rho * yhy) * rho;
      h[0] += c * s.a * s.a - rho * (hy.a * s.a + s.a * hy.a);
      h[1] += c * s.a * s.b - rho * (hy.a * s.b + s.a * hy.b);
      h[2] += c * s.b * s.a - rho * (hy.b * s.a + s.b * hy.a);
      h[3] += c * s.b * s.b - rho * (hy.b * s.b + s.b * hy.b);
    }
    x = xn;
    fx = fn;
    g = gn;
    converged = detail::inf_norm(g) < opts.gradient_tolerance;
  }

  GpdFit fit;
  fit.threshold = t;
  fit.xi = x.a;
  fit.beta = std::exp(x.b);
  fit.n_exceed = lik.size();
  fit.loglik = -fx * n;
  fit.iterations = iter;
  fit.se_xi = std::numeric_limits<double>::quiet_NaN();
  fit.se_beta = std::numeric_limits<double>::quiet_NaN();

  if (!converged) {
    throw FitError("GPD likelihood optimization did not converge after " + std::to_string(iter) +
                       " iterations (|grad| = " + format_number(detail::inf_norm(g)) + ")",
                   fit);
  }

  const auto hess = lik.hessian(fit.xi, fit.beta);
  // observed information I = -H; covariance = I^{-1}
  const double i11 = -hess[0][0], i12 = -hess[0][1], i22 = -hess[1][1];
  const double det = i11 * i22 - i12 * i12;
  if (!(i11 > 0) || !(det > 0)) {
    throw FitError("observed information matrix is not positive definite at the optimum", fit);
  }
  fit.se_xi = std::sqrt(i22 / det);
  fit.se_beta = std::sqrt(i11 / det);
  fit.converged = true;
  return fit;
}

//------------------------------------------------------------------------
// Threshold stability scan
//------------------------------------------------------------------------

struct ScanEntry {
  double threshold;
  std::size_t n_exceed;
  std::optional<GpdFit> fit;  // absent when skipped
  std::string warning;        // empty when the fit converged
};

/// One GPD fit per threshold. Thresholds leaving fewer than 10 exceedances are
/// skipped with a warning; non-converged fits are kept (best iterate) with a warning.
inline std::vector<ScanEntry> threshold_scan(std::span<const double> xs, std::span<const double> thresholds,
                                             const GpdMleOptions& opts = {}) {
  if (thresholds.empty()) throw InputError("threshold scan requires at least one threshold");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1])) throw InputError("scan thresholds must be strictly increasing");

  std::vector<ScanEntry> out;
  for (double t : thresholds) {
    const auto exc = exceedances(xs, t);
    ScanEntry e{t, exc.size(), std::nullopt, {}};
    if (exc.size() < kMinFitExceedances) {
      e.warning = "skipped: " + std::to_string(exc.size()) + " exceedances (need " +
                  std::to_string(kMinFitExceedances) + ")";
    } else {
      try {
        e.fit = gpd_mle(exc, t, opts);
      } catch (const FitError& err) {
        e.fit = err.best();
        e.warning = err.what();
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Stability table: `threshold,xi,se_xi,beta,se_beta,n_exceed,converged`. Skipped thresholds are not written.
inline void write_stability_csv(std::ostream& os, const std::vector<ScanEntry>& scan) {
  os << "threshold,xi,se_xi,beta,se_beta,n_exceed,converged\n";
  for (const auto& e : scan) {
    if (!e.fit) continue;
    const auto& f = *e.fit;
    os << format_number(f.threshold) << ',' << format_number(f.xi) << ',' << format_number(f.se_xi) << ','
       << format_number(f.beta) << ',' << format_number(f.se_beta) << ',' << f.n_exceed << ','
       << (f.converged ? "true" : "false") << '\n';
  }
}

inline json to_json(const GpdFit& f) {
  return {{"threshold", f.threshold}, {"xi", f.xi},           {"se_xi", f.se_xi},
          {"beta", f.beta},           {"se_beta", f.se_beta}, {"n_exceed", f.n_exceed},
          {"loglik", f.loglik},       {"converged", f.converged}, {"consistent", f.consistent()},
          {"iterations", f.iterations}};
}

inline json to_json(const std::vector<ScanEntry>& scan) {
  json rows = json::array();
  for (const auto& e : scan) {
    json r{{"threshold", e.threshold}, {"n_exceed", e.n_exceed}};
    r["fit"] = e.fit ? to_json(*e.fit) : json(nullptr);
    if (!e.warning.empty()) r["warning"] = e.warning;
    rows.push_back(std::move(r));
  }
  return rows;
}

//------------------------------------------------------------------------
// Goodness of fit
//------------------------------------------------------------------------

/// Anderson-Darling A^2 of a sample against a fully specified GPD.
inline double anderson_darling(std::span<const double> xs, const GpdParams& p) {
  if (xs.empty()) throw InputError("Anderson-Darling statistic requires observations");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  constexpr double kLogFloor = -700.0;
  std::vector<double> log_f(n), log_s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ls = gpd_log_survival(p, v[i]);
    log_s[i] = std::max(ls, kLogFloor);
    // log F = log(1 - exp(log S))
    log_f[i] = ls == 0 ? kLogFloor : std::max(std::log(-std::expm1(ls)), kLogFloor);
  }
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i)
    acc += static_cast<double>(2 * i + 1) * (log_f[i] + log_s[n - 1 - i]);
  return -static_cast<double>(n) - acc / static_cast<double>(n);
}

inline constexpr std::size_t kMinGofExceedances = 20;
inline constexpr std::size_t kMinBootstrapReplicates = 99;

struct GofResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
  std::size_t n_failed = 0;
  GpdFit fit;
};

struct BootstrapOptions {
  /// Worker threads; 0 = hardware concurrency. Results do not depend on this.
  unsigned threads = 0;
  GpdMleOptions mle{};
};

/// Parametric-bootstrap goodness-of-fit test for the GPD.
///
/// Fits by ML, computes A^2 against the fit, then refits and recomputes A^2 on
/// n_boot samples drawn from the fitted model. Replicate b uses
/// derive_seed(seed, b), so the result is independent of thread scheduling.
/// p = (1 + #{A^2_b >= A^2_obs}) / (m + 1) over the m successful replicates.
inline GofResult bootstrap_gof(std::span<const double> exc, double t, std::size_t n_boot, std::uint64_t seed,
                               const BootstrapOptions& opts = {}) {
  if (exc.size() < kMinGofExceedances)
    throw InsufficientDataError("bootstrap test requires at least " + std::to_string(kMinGofExceedances) +
                                " exceedances, got " + std::to_string(exc.size()));
  if (n_boot < kMinBootstrapReplicates)
    throw InputError("bootstrap test requires at least " + std::to_string(kMinBootstrapReplicates) + " replicates");

  GofResult out;
  out.fit = gpd_mle(exc, t, opts.mle);
  out.statistic = anderson_darling(exc, out.fit.params());
  out.n_boot = n_boot;
  out.seed = seed;

  const GpdParams fitted = out.fit.params();
  const std::size_t n = exc.size();
  std::vector<double> stats(n_boot, std::numeric_limits<double>::quiet_NaN());
  const auto run = [&](std::size_t b) {
    const auto sample = gpd_sample(fitted, n, derive_seed(seed, b));
    try {
      const auto refit = gpd_mle(sample, t, opts.mle);
      stats[b] = anderson_darling(sample, refit.params());
    } catch (const Error&) {
      // counted as a failed replicate
    }
  };

  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_boot));
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_boot; ++b) run(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < n_boot; b += workers) run(b);
      });
  }

  std::size_t exceed = 0, ok = 0;
  for (double s : stats) {
    if (std::isnan(s)) {
      ++out.n_failed;
      continue;
    }
    ++ok;
    if (s >= out.statistic) ++exceed;
  }
  if (static_cast<double>(out.n_failed) > 0.10 * static_cast<double>(n_boot))
    throw NumericalError("bootstrap test: " + std::to_string(out.n_failed) + " of " + std::to_string(n_boot) +
                         " resample fits failed");
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(ok + 1);
  return out;
}

inline json to_json(const GofResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n_boot", r.n_boot},
          {"seed", r.seed},           {"n_failed", r.n_failed}, {"fit", to_json(r.fit)}};
}

}  // namespace tailcast
