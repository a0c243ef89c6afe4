// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tailcast/diagnostics.hpp"
#include "tailcast/error.hpp"
#include "tailcast/format.hpp"
#include "tailcast/ingest.hpp"

namespace tailcast {

/// Threshold exceedances viewed as a homogeneous Poisson process.
struct ExceedanceProcess {
  double threshold = 0;
  std::vector<double> event_times;    // epoch seconds
  std::vector<double> interarrivals;  // days
  double rate_hat = 0;                // events per day, n / sum z
  double survival_hat = 0;            // days, sum z / n
  std::size_t zero_interarrivals = 0; // simultaneous exceedances

  double span_days() const {
    double s = 0;
    for (double z : interarrivals) s += z;
    return s;
  }
};

/// Exceedance times of `s` above `t` and their interarrival times in days.
inline ExceedanceProcess build_process(const EventSeries& s, double t) {
  ExceedanceProcess p;
  p.threshold = t;
  for (const auto& r : s)
    if (r.magnitude > t) p.event_times.push_back(r.timestamp);
  if (p.event_times.size() < 2)
    throw InsufficientDataError("process requires at least 2 exceedances of the threshold, got " +
                                std::to_string(p.event_times.size()));
  p.interarrivals.reserve(p.event_times.size() - 1);
  double total = 0;
  for (std::size_t i = 1; i < p.event_times.size(); ++i) {
    const double z = (p.event_times[i] - p.event_times[i - 1]) / kSecondsPerDay;
    if (z == 0) ++p.zero_interarrivals;
    p.interarrivals.push_back(z);
    total += z;
  }
  if (!(total > 0)) throw DegenerateInputError("all exceedances are simultaneous; rate undefined");
  const double n = static_cast<double>(p.interarrivals.size());
  p.survival_hat = total / n;
  p.rate_hat = n / total;
  return p;
}

/// E[N(theta)] = lambda theta.
inline double expected_count(const ExceedanceProcess& p, double theta_days) {
  if (!(theta_days > 0)) throw InputError("horizon must be > 0");
  return p.rate_hat * theta_days;
}

inline constexpr std::size_t kMinAcfInterarrivals = 10;

struct IidChecks {
  DiagnosticSeries qq;
  std::optional<DiagnosticSeries> acf;
  std::string acf_error;  // reason when acf is absent
};

/// Exponential Q-Q and autocorrelation of the interarrival times. The ACF
/// needs at least 10 interarrivals; below that only the Q-Q data is produced.
inline IidChecks iid_checks(const ExceedanceProcess& p, std::optional<std::size_t> max_lag = std::nullopt) {
  IidChecks out{exponential_qq(p.interarrivals), std::nullopt, {}};
  const std::size_t n = p.interarrivals.size();
  if (n < kMinAcfInterarrivals) {
    out.acf_error = "insufficient interarrivals for ACF: " + std::to_string(n) + " < " +
                    std::to_string(kMinAcfInterarrivals);
    return out;
  }
  out.acf = acf(p.interarrivals, max_lag.value_or(default_acf_lags(n)));
  return out;
}

inline json to_json(const ExceedanceProcess& p) {
  return {{"threshold", p.threshold},
          {"n_events", p.event_times.size()},
          {"n_interarrivals", p.interarrivals.size()},
          {"zero_interarrivals", p.zero_interarrivals},
          {"total_days", p.span_days()},
          {"survival_hat", p.survival_hat},
          {"rate_hat", p.rate_hat},
          {"interarrivals", p.interarrivals}};
}

}  // namespace tailcast
