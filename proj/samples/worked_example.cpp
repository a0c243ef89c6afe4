// Apache License, Version 2.0, refer to LICENSE.txt
//
// Gamma-Poisson forecast for a process with 38 interarrivals totalling
// 702 days, updated with one new 60-day interarrival.

#include <cstdio>
#include <vector>

#include "tailcast/tailcast.hpp"

int main() {
  using namespace tailcast;

  // 37 interarrivals of 18 days and one of 36: 38 values summing to 702.
  std::vector<double> z(37, 18.0);
  z.push_back(36.0);

  const auto prior = prior_from_interarrivals(z);
  const auto [prior_mean, prior_var] = gamma_summary(prior.params);
  std::printf("prior      Gamma(%g, %g)  mean %.6f  variance %.4e\n", prior.params.alpha, prior.params.beta,
              prior_mean, prior_var);

  const std::vector<double> fresh{60.0};
  const auto post = update(prior, fresh);
  const auto [post_mean, post_var] = gamma_summary(post.params);
  std::printf("posterior  Gamma(%g, %g)  mean %.6f  variance %.4e\n", post.params.alpha, post.params.beta,
              post_mean, post_var);

  const auto before = forecast(prior, 365.0);
  const auto after = forecast(post, 365.0);
  std::printf("expected exceedances in 365 days: prior %.3f, posterior %.3f\n", before.predictive_mean,
              after.predictive_mean);
  std::printf("mean waiting time: %.3f days\n", mean_waiting_time(post));
  std::printf("90%% predictive interval: [%zu, %zu]\n", after.credible_low, after.credible_high);
}
