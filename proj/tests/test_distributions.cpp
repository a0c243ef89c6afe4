// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

#include "quadrature.hpp"
#include "support.hpp"

using namespace tailcast;

TEST(Gev, GumbelAtOrigin) { EXPECT_NEAR(gev_cdf(GevParams{0.0}, 0.0), std::exp(-1.0), 1e-15); }

TEST(Gev, LowerSupportEndpoint) { EXPECT_EQ(gev_cdf(GevParams{1.0}, -1.0), 0.0); }

TEST(Gev, FrechetBranchHandValue) { EXPECT_NEAR(gev_cdf(GevParams{0.5}, 2.0), std::exp(-0.25), 1e-15); }

TEST(Gev, WeibullAboveUpperEndpointIsOne) { EXPECT_EQ(gev_cdf(GevParams{-0.5}, 3.0), 1.0); }

TEST(Gev, NonFiniteRejected) {
  EXPECT_THROW(gev_cdf(GevParams{0.5}, std::numeric_limits<double>::quiet_NaN()), InputError);
  EXPECT_THROW(gev_cdf(GevParams{std::numeric_limits<double>::infinity()}, 1.0), InputError);
}

TEST(Gev, TypeAndAlpha) {
  EXPECT_EQ(GevParams{0.5}.type(), ExtremeValueType::frechet);
  EXPECT_EQ(GevParams{-0.25}.type(), ExtremeValueType::weibull);
  EXPECT_EQ(GevParams{0.0}.type(), ExtremeValueType::gumbel);
  EXPECT_DOUBLE_EQ(GevParams{0.5}.alpha(), 2.0);
  EXPECT_DOUBLE_EQ(GevParams{-0.25}.alpha(), 4.0);
}

TEST(Gev, MatchesClassicalForms) {
  // H_xi(x) = Phi_alpha(1 + x/alpha) with alpha = 1/xi.
  for (double x : {-0.5, 0.0, 1.0, 4.0}) {
    EXPECT_NEAR(gev_cdf(GevParams{0.5}, x), frechet_cdf(2.0, 1.0 + x / 2.0), 1e-14);
    EXPECT_NEAR(gev_cdf(GevParams{-0.5}, x), weibull_cdf(2.0, -(1.0 - x / 2.0)), 1e-14);
    EXPECT_NEAR(gev_cdf(GevParams{0.0}, x), gumbel_cdf(x), 1e-15);
  }
}

TEST(Gev, NondecreasingInUnitInterval) {
  for (double xi : {-0.7, -0.1, 0.0, 0.3, 1.2}) {
    double prev = 0;
    for (double x = -10; x <= 10; x += 0.05) {
      const double f = gev_cdf(GevParams{xi}, x);
      EXPECT_GE(f, prev);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      prev = f;
    }
  }
}

TEST(FrechetTail, HandValues) {
  EXPECT_NEAR(frechet_tail(1.0, 1.0), 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(frechet_tail(2.0, 10.0), 1 - std::exp(-0.01), 1e-15);
  EXPECT_NEAR(frechet_tail(1.0, 1000.0) / 1e-3, 1.0, 1e-3);
  EXPECT_THROW(frechet_tail(1.0, 0.0), InputError);
  EXPECT_THROW(frechet_tail(0.0, 1.0), InputError);
}

TEST(Gpd, CdfHandValues) {
  EXPECT_NEAR(gpd_cdf(GpdParams{0.0, 2.0, 0.0}, 2.0), 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(gpd_cdf(GpdParams{1.0, 1.0, 0.0}, 1.0), 0.5, 1e-15);
  for (double xi : {-0.4, 0.0, 0.8})
    for (double t : {0.0, 5.0}) EXPECT_EQ(gpd_cdf(GpdParams{xi, 3.0, t}, t), 0.0);
  EXPECT_EQ(gpd_cdf(GpdParams{0.5, 1.0, 10.0}, 3.0), 0.0);
}

TEST(Gpd, BoundedSupportForNegativeShape) {
  const GpdParams p{-0.5, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(p.upper_endpoint(), 5.0);
  EXPECT_EQ(gpd_cdf(p, 5.0), 1.0);
  EXPECT_EQ(gpd_cdf(p, 7.0), 1.0);
  EXPECT_EQ(gpd_pdf(p, 7.0), 0.0);
}

TEST(Gpd, InvalidScaleRejected) {
  EXPECT_THROW(gpd_cdf(GpdParams{0.2, 0.0, 0.0}, 1.0), ParameterError);
  EXPECT_THROW(gpd_cdf(GpdParams{0.2, -1.0, 0.0}, 1.0), ParameterError);
}

TEST(Gpd, ExponentialBranchMatchesExpTail) {
  const GpdParams p{0.0, 1.0 / 0.7, 0.0};
  for (double x = 0; x < 30; x += 0.37) EXPECT_NEAR(gpd_cdf(p, x), 1 - exp_tail(0.7, x), 1e-12);
}

TEST(Gpd, ContinuousInShapeAtZero) {
  for (double x = 0; x < 50; x += 0.5)
    EXPECT_LT(std::abs(gpd_cdf(GpdParams{1e-9, 1.0, 0.0}, x) - gpd_cdf(GpdParams{0.0, 1.0, 0.0}, x)), 1e-6);
}

TEST(Gpd, QuantileHandValues) {
  EXPECT_EQ(gpd_quantile(GpdParams{0.3, 2.0, 7.0}, 0.0), 7.0);
  EXPECT_NEAR(gpd_quantile(GpdParams{0.0, 1.0, 0.0}, 1 - std::exp(-1.0)), 1.0, 1e-14);
  EXPECT_NEAR(gpd_quantile(GpdParams{1.0, 1.0, 0.0}, 0.5), 1.0, 1e-14);
  EXPECT_THROW(gpd_quantile(GpdParams{0.3, 1.0, 0.0}, 1.0), InputError);
  EXPECT_THROW(gpd_quantile(GpdParams{0.3, 1.0, 0.0}, -0.1), InputError);
}

TEST(Gpd, QuantileInvertsCdf) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const GpdParams p{rng.uniform() * 1.6 - 0.45, 0.1 + 10 * rng.uniform(), 100 * rng.uniform()};
    const double q = rng.uniform() * 0.999;
    EXPECT_NEAR(gpd_cdf(p, gpd_quantile(p, q)), q, 1e-10 * std::max(q, 1e-3));
    const double x = gpd_quantile(p, q);
    if (x > p.threshold) {
      EXPECT_NEAR(gpd_quantile(p, gpd_cdf(p, x)), x, 1e-9 * x);
    }
  }
}

TEST(Gpd, PdfIntegratesCdf) {
  const GpdParams p{0.4, 2.0, 1.0};
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double f = integrator.integrate([&](double x) { return gpd_pdf(p, x); }, 1.0, 6.0);
  EXPECT_NEAR(f, gpd_cdf(p, 6.0), 1e-10);
}

TEST(Gpd, SampleDeterministicAndInSupport) {
  const GpdParams p{-0.3, 2.0, 5.0};
  const auto a = gpd_sample(p, 1000, 42);
  const auto b = gpd_sample(p, 1000, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, gpd_sample(p, 1000, 43));
  for (double x : a) {
    EXPECT_GE(x, 5.0);
    EXPECT_LE(x, p.upper_endpoint());
  }
  const auto one = gpd_sample(GpdParams{0.5, 1.0, 3.0}, 1, 9);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_GE(one[0], 3.0);
}

TEST(Gpd, SampleKolmogorovSmirnov) {
  const GpdParams p{0.5, 1.0, 0.0};
  auto xs = gpd_sample(p, 100000, 3);
  std::sort(xs.begin(), xs.end());
  double d = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = gpd_cdf(p, xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 0.01);
}

TEST(Gpd, SampleMeanMatchesAnalytic) {
  for (double xi : {-0.2, 0.0, 0.25}) {
    const GpdParams p{xi, 3.0, 2.0};
    const auto xs = gpd_sample(p, 50000, 17);
    double m = 0, m2 = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (double x : xs) m2 += (x - m) * (x - m);
    const double se = std::sqrt(m2 / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    EXPECT_NEAR(m, gpd_mean(p), 3 * se) << "xi=" << xi;
    EXPECT_NEAR(gpd_mean(p), 2.0 + 3.0 / (1 - xi), 1e-12);
  }
}

TEST(Gpd, MomentExistence) {
  EXPECT_TRUE(gpd_moment_exists(GpdParams{0.77, 1.0, 0.0}, 1));
  EXPECT_FALSE(gpd_moment_exists(GpdParams{0.77, 1.0, 0.0}, 2));
  for (int k = 1; k < 20; ++k) EXPECT_TRUE(gpd_moment_exists(GpdParams{0.0, 1.0, 0.0}, k));
  EXPECT_FALSE(gpd_moment_exists(GpdParams{0.5, 1.0, 0.0}, 2));
}

TEST(Gpd, MomentDivergenceShowsInMaxSumRatio) {
  // xi = 0.77 >= 1/2: the second-moment ratio stays away from zero.
  const auto xs = gpd_sample(GpdParams{0.77, 1.0, 0.0}, 100000, 5);
  EXPECT_GT(max_sum_ratio(xs, 2.0).points.back().y, 0.01);
  EXPECT_LT(max_sum_ratio(xs, 0.5).points.back().y, 0.01);
}

TEST(ExpTail, HandValues) {
  EXPECT_EQ(exp_tail(3.0, 0.0), 1.0);
  EXPECT_NEAR(exp_tail(0.0541, 18.5), std::exp(-0.0541 * 18.5), 1e-15);
  EXPECT_NEAR(exp_tail(0.0541, 18.5), 0.3675, 1e-4);
  EXPECT_NEAR(exp_tail(1.0, std::log(2.0)), 0.5, 1e-15);
  EXPECT_THROW(exp_tail(1.0, -1.0), InputError);
  EXPECT_THROW(exp_tail(0.0, 1.0), InputError);
}

TEST(Poisson, HandValues) {
  EXPECT_NEAR(poisson_pmf(PoissonCount{1.0, 1.0}, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(poisson_pmf(PoissonCount{1.0, 2.0}, 2), 2 * std::exp(-2.0), 1e-15);
  EXPECT_THROW(poisson_pmf(PoissonCount{0.0, 2.0}, 2), ParameterError);
}

TEST(Poisson, NormalizedAtWorkedExampleMean) {
  const PoissonCount pc{0.0541, 365.0};
  const double mu = pc.mean();
  double total = 0, mean = 0;
  const auto top = static_cast<std::uint64_t>(mu + 20 * std::sqrt(mu));
  for (std::uint64_t n = 0; n <= top; ++n) {
    const double p = poisson_pmf(pc, n);
    total += p;
    mean += static_cast<double>(n) * p;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_NEAR(mean, 19.7465, 1e-4);
}

TEST(Gamma, Summaries) {
  const auto a = gamma_summary(GammaParams{38, 702});
  EXPECT_NEAR(a.mean, 0.054131, 1e-6);
  EXPECT_NEAR(a.variance, 7.71e-5, 1e-7);
  const auto b = gamma_summary(GammaParams{39, 762});
  EXPECT_NEAR(b.mean, 0.051181, 1e-6);
  EXPECT_NEAR(b.variance, 6.72e-5, 1e-7);
  const auto c = gamma_summary(GammaParams{1, 1});
  EXPECT_EQ(c.mean, 1.0);
  EXPECT_EQ(c.variance, 1.0);
  EXPECT_THROW(gamma_summary(GammaParams{0, 1}), ParameterError);
  EXPECT_THROW(gamma_summary(GammaParams{1, -1}), ParameterError);
}

TEST(Gamma, PdfMatchesBoost) {
  for (double a : {0.5, 1.0, 3.7, 39.0})
    for (double b : {0.3, 1.0, 762.0}) {
      const boost::math::gamma_distribution<double> ref(a, 1.0 / b);
      const double m = a / b;
      for (double f : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        const double x = m * f;
        EXPECT_NEAR(gamma_pdf(GammaParams{a, b}, x), boost::math::pdf(ref, x),
                    1e-12 * std::max(1.0, boost::math::pdf(ref, x)));
      }
    }
}

TEST(NegBinom, GeometricUnitCase) {
  const GammaParams g{1, 1};
  EXPECT_NEAR(negbinom_pmf(g, 1.0, 0), 0.5, 1e-15);
  for (std::uint64_t n = 0; n < 30; ++n) EXPECT_NEAR(negbinom_pmf(g, 1.0, n), std::pow(0.5, n + 1.0), 1e-15);
}

TEST(NegBinom, WorkedExampleMeanAndNormalization) {
  const GammaParams g{39, 762};
  double total = 0, mean = 0;
  for (std::uint64_t n = 0; n <= 200; ++n) {
    const double p = negbinom_pmf(g, 365.0, n);
    total += p;
    mean += static_cast<double>(n) * p;
  }
  EXPECT_GE(total, 1 - 1e-9);
  EXPECT_NEAR(mean, 18.6811, 1e-4);
}

TEST(NegBinom, MatchesMixtureQuadrature) {
  for (double a : {0.7, 2.0, 38.0})
    for (double b : {1.0, 702.0})
      for (double theta : {1.0, 365.0})
        for (std::uint64_t n : {0u, 1u, 5u, 20u}) {
          const GammaParams g{a, b};
          EXPECT_NEAR(negbinom_pmf(g, theta, n), fixtures::gamma_poisson_quadrature(g, theta, n), 1e-6)
              << a << ' ' << b << ' ' << theta << ' ' << n;
        }
}
