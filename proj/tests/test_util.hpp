#pragma once

// Shared oracle helpers for the test suites. Everything here is independent
// of the library implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "qjf/random.hpp"

namespace testutil {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double standard_error(std::span<const double> v) {
  return sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
}

/// Kolmogorov Q function, same series as the library uses; fine for oracle
/// duty since the tests only gate on coarse thresholds.
inline double ks_q(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * x * x);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(2.0 * sum, 0.0));
}

/// One-sample KS test of `samples` against an analytic CDF.
inline double one_sample_ks_p(std::vector<double> samples,
                              const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  const double sq = std::sqrt(n);
  return ks_q((sq + 0.12 + 0.11 / sq) * d);
}

/// Upper-tail chi-squared probability via the Wilson-Hilferty cube-root
/// normal approximation; adequate for goodness-of-fit gates at df >= 10.
inline double chi2_sf(double x, double df) {
  const double z = (std::cbrt(x / df) - (1.0 - 2.0 / (9.0 * df))) /
                   std::sqrt(2.0 / (9.0 * df));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

/// Homogeneous Poisson arrival times on [0, horizon).
inline std::vector<double> poisson_stream(qjf::RngEngine& rng, double rate,
                                          double horizon) {
  std::vector<double> times;
  double t = 0.0;
  while (true) {
    t += qjf::exponential(rng, rate);
    if (t >= horizon) break;
    times.push_back(t);
  }
  return times;
}

}  // namespace testutil
