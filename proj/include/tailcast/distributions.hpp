// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/error.hpp"
#include "tailcast/random.hpp"

namespace tailcast {

namespace detail {

template <std::floating_point Real>
void require_finite(Real v, const char* what) {
  if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
}

}  // namespace detail

/// Shape parameters with |xi| below this are evaluated with the xi = 0 limit.
inline constexpr double kShapeZeroTolerance = 1e-12;

//------------------------------------------------------------------------
// Generalized extreme value family
//------------------------------------------------------------------------

enum class ExtremeValueType { gumbel, frechet, weibull };

template <std::floating_point Real = double>
struct BasicGevParams {
  Real xi{0};

  ExtremeValueType type() const noexcept {
    if (xi > 0) return ExtremeValueType::frechet;
    if (xi < 0) return ExtremeValueType::weibull;
    return ExtremeValueType::gumbel;
  }

  /// alpha of the equivalent Frechet / Weibull law (1/|xi|); infinite for Gumbel.
  Real alpha() const noexcept {
    return xi == 0 ? std::numeric_limits<Real>::infinity() : Real(1) / std::abs(xi);
  }
};
using GevParams = BasicGevParams<double>;

/// Standardized GEV distribution function H_xi(x).
///
/// Outside the support (1 + xi*x <= 0) returns the limit: 0 below the lower
/// endpoint when xi > 0, 1 above the upper endpoint when xi < 0.
template <std::floating_point Real>
Real gev_cdf(const BasicGevParams<Real>& p, Real x) {
  detail::require_finite(p.xi, "GEV shape");
  detail::require_finite(x, "GEV argument");
  if (std::abs(p.xi) < Real(kShapeZeroTolerance)) return std::exp(-std::exp(-x));
  const Real z = 1 + p.xi * x;
  if (z <= 0) return p.xi > 0 ? Real(0) : Real(1);
  return std::exp(-std::exp(-std::log(z) / p.xi));
}

template <std::floating_point Real>
Real gumbel_cdf(Real x) {
  detail::require_finite(x, "Gumbel argument");
  return std::exp(-std::exp(-x));
}

template <std::floating_point Real>
Real frechet_cdf(Real alpha, Real x) {
  if (!(alpha > 0)) throw ParameterError("Frechet alpha must be > 0");
  if (x <= 0) return 0;
  return std::exp(-std::pow(x, -alpha));
}

template <std::floating_point Real>
Real weibull_cdf(Real alpha, Real x) {
  if (!(alpha > 0)) throw ParameterError("Weibull alpha must be > 0");
  if (x > 0) return 1;
  return std::exp(-std::pow(-x, alpha));
}

/// 1 - Phi_alpha(x), the Frechet survival function. Behaves like x^-alpha
/// for large x.
template <std::floating_point Real>
Real frechet_tail(Real alpha, Real x) {
  if (!(alpha > 0)) throw ParameterError("Frechet alpha must be > 0");
  if (!(x > 0) || !std::isfinite(x)) throw InputError("Frechet tail requires finite x > 0");
  return -std::expm1(-std::pow(x, -alpha));
}

//------------------------------------------------------------------------
// Generalized Pareto distribution
//------------------------------------------------------------------------

template <std::floating_point Real = double>
struct BasicGpdParams {
  Real xi{0};
  Real beta{1};
  Real threshold{0};

  void validate() const {
    if (!std::isfinite(xi)) throw ParameterError("GPD shape must be finite");
    if (!std::isfinite(threshold)) throw ParameterError("GPD threshold must be finite");
    if (!(beta > 0) || !std::isfinite(beta)) throw ParameterError("GPD scale must be finite and > 0");
  }

  /// Right endpoint of the support; +inf unless xi < 0.
  Real upper_endpoint() const noexcept {
    if (xi < 0) return threshold - beta / xi;
    return std::numeric_limits<Real>::infinity();
  }
};
using GpdParams = BasicGpdParams<double>;

template <std::floating_point Real>
Real gpd_cdf(const BasicGpdParams<Real>& p, Real x) {
  p.validate();
  if (std::isnan(x)) throw InputError("GPD argument is NaN");
  if (x <= p.threshold) return 0;
  const Real y = (x - p.threshold) / p.beta;
  if (std::abs(p.xi) < Real(kShapeZeroTolerance)) return -std::expm1(-y);
  if (p.xi < 0 && x >= p.upper_endpoint()) return 1;
  return -std::expm1(-std::log1p(p.xi * y) / p.xi);
}

/// log(1 - gpd_cdf), accurate deep in the tail.
template <std::floating_point Real>
Real gpd_log_survival(const BasicGpdParams<Real>& p, Real x) {
  p.validate();
  if (std::isnan(x)) throw InputError("GPD argument is NaN");
  if (x <= p.threshold) return 0;
  const Real y = (x - p.threshold) / p.beta;
  if (std::abs(p.xi) < Real(kShapeZeroTolerance)) return -y;
  if (p.xi < 0 && x >= p.upper_endpoint()) return -std::numeric_limits<Real>::infinity();
  return -std::log1p(p.xi * y) / p.xi;
}

template <std::floating_point Real>
Real gpd_logpdf(const BasicGpdParams<Real>& p, Real x) {
  p.validate();
  const Real neg_inf = -std::numeric_limits<Real>::infinity();
  if (!(x >= p.threshold)) return neg_inf;
  const Real y = (x - p.threshold) / p.beta;
  if (std::abs(p.xi) < Real(kShapeZeroTolerance)) return -std::log(p.beta) - y;
  const Real z = p.xi * y;
  if (z <= -1) return neg_inf;
  return -std::log(p.beta) - (1 + 1 / p.xi) * std::log1p(z);
}

template <std::floating_point Real>
Real gpd_pdf(const BasicGpdParams<Real>& p, Real x) {
  return std::exp(gpd_logpdf(p, x));
}

/// Inverse of gpd_cdf on [0, 1).
template <std::floating_point Real>
Real gpd_quantile(const BasicGpdParams<Real>& p, Real q) {
  p.validate();
  if (!(q >= 0 && q < 1)) throw InputError("GPD quantile level must lie in [0, 1)");
  if (q == 0) return p.threshold;
  const Real log_survival = std::log1p(-q);
  if (std::abs(p.xi) < Real(kShapeZeroTolerance)) return p.threshold - p.beta * log_survival;
  return p.threshold + p.beta / p.xi * std::expm1(-p.xi * log_survival);
}

/// Mean of the GPD, t + beta / (1 - xi); +inf when xi >= 1.
template <std::floating_point Real>
Real gpd_mean(const BasicGpdParams<Real>& p) {
  p.validate();
  if (p.xi >= 1) return std::numeric_limits<Real>::infinity();
  return p.threshold + p.beta / (1 - p.xi);
}

/// True iff the moment of the given order is finite, i.e. xi < 1/order.
template <std::floating_point Real>
bool gpd_moment_exists(const BasicGpdParams<Real>& p, int order) {
  if (order < 1) throw InputError("moment order must be >= 1");
  return p.xi < Real(1) / Real(order);
}

/// n inversion draws from the GPD. Deterministic in `seed`.
template <std::floating_point Real>
std::vector<Real> gpd_sample(const BasicGpdParams<Real>& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  if (n < 1) throw InputError("sample size must be >= 1");
  Rng rng(seed);
  std::vector<Real> out(n);
  for (auto& v : out) v = gpd_quantile(p, static_cast<Real>(rng.uniform()));
  return out;
}

//------------------------------------------------------------------------
// Exponential and Poisson
//------------------------------------------------------------------------

/// Pr(interarrival > theta) for exponential interarrivals with the given rate.
template <std::floating_point Real>
Real exp_tail(Real rate, Real theta) {
  if (!(rate > 0) || !std::isfinite(rate)) throw ParameterError("exponential rate must be finite and > 0");
  if (!(theta >= 0)) throw InputError("interval length must be >= 0");
  return std::exp(-rate * theta);
}

/// Poisson rate (events/day) over a horizon (days).
template <std::floating_point Real = double>
struct BasicPoissonCount {
  Real rate{1};
  Real horizon{1};

  void validate() const {
    if (!(rate > 0) || !std::isfinite(rate)) throw ParameterError("Poisson rate must be finite and > 0");
    if (!(horizon > 0) || !std::isfinite(horizon)) throw ParameterError("horizon must be finite and > 0");
  }

  Real mean() const noexcept { return rate * horizon; }
};
using PoissonCount = BasicPoissonCount<double>;

template <std::floating_point Real>
Real poisson_log_pmf(Real mean, std::uint64_t n) {
  if (!(mean > 0) || !std::isfinite(mean)) throw ParameterError("Poisson mean must be finite and > 0");
  const Real k = static_cast<Real>(n);
  return k * std::log(mean) - mean - std::lgamma(k + 1);
}

/// Pr(N(theta) = n) = (lambda theta)^n / n! exp(-lambda theta).
template <std::floating_point Real>
Real poisson_pmf(const BasicPoissonCount<Real>& pc, std::uint64_t n) {
  pc.validate();
  return std::exp(poisson_log_pmf(pc.mean(), n));
}

//------------------------------------------------------------------------
// Gamma and the Gamma-Poisson mixture
//------------------------------------------------------------------------

/// Gamma law in the shape / rate parameterization.
template <std::floating_point Real = double>
struct BasicGammaParams {
  Real alpha{1};
  Real beta{1};

  void validate() const {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ParameterError("Gamma shape must be finite and > 0");
    if (!(beta > 0) || !std::isfinite(beta)) throw ParameterError("Gamma rate must be finite and > 0");
  }

  friend bool operator==(const BasicGammaParams&, const BasicGammaParams&) = default;
};
using GammaParams = BasicGammaParams<double>;

template <std::floating_point Real>
struct GammaSummary {
  Real mean;
  Real variance;
};

template <std::floating_point Real>
GammaSummary<Real> gamma_summary(const BasicGammaParams<Real>& g) {
  g.validate();
  return {g.alpha / g.beta, g.alpha / (g.beta * g.beta)};
}

template <std::floating_point Real>
Real gamma_log_pdf(const BasicGammaParams<Real>& g, Real x) {
  g.validate();
  if (x < 0) return -std::numeric_limits<Real>::infinity();
  if (x == 0) {
    if (g.alpha < 1) return std::numeric_limits<Real>::infinity();
    if (g.alpha > 1) return -std::numeric_limits<Real>::infinity();
    return std::log(g.beta);
  }
  return g.alpha * std::log(g.beta) - std::lgamma(g.alpha) + (g.alpha - 1) * std::log(x) - g.beta * x;
}

template <std::floating_point Real>
Real gamma_pdf(const BasicGammaParams<Real>& g, Real x) {
  return std::exp(gamma_log_pdf(g, x));
}

/// log Pr(N(theta) = n) under Poisson(lambda theta) with lambda ~ Gamma(alpha, beta).
///
/// Negative binomial with the generalized binomial coefficient
/// Gamma(n + alpha) / (Gamma(alpha) n!), so non-integer alpha is exact.
template <std::floating_point Real>
Real negbinom_log_pmf(const BasicGammaParams<Real>& g, Real theta, std::uint64_t n) {
  g.validate();
  if (!(theta > 0) || !std::isfinite(theta)) throw InputError("horizon must be finite and > 0");
  const Real k = static_cast<Real>(n);
  const Real log_coef = std::lgamma(k + g.alpha) - std::lgamma(g.alpha) - std::lgamma(k + 1);
  // log(beta/(beta+theta)) and log(theta/(beta+theta)) without cancellation
  const Real log_p0 = -std::log1p(theta / g.beta);
  const Real log_p1 = -std::log1p(g.beta / theta);
  return log_coef + g.alpha * log_p0 + (n == 0 ? Real(0) : k * log_p1);
}

template <std::floating_point Real>
Real negbinom_pmf(const BasicGammaParams<Real>& g, Real theta, std::uint64_t n) {
  return std::exp(negbinom_log_pmf(g, theta, n));
}

}  // namespace tailcast
