#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qjf {

/// Complement ECDF on the sorted unique sample values:
/// probability[i] = P(sample >= support[i]), right-continuous.
struct SurvivalCurve {
  std::vector<double> support;      ///< strictly increasing
  std::vector<double> probability;  ///< non-increasing, from 1 down to 1/n
};

/// P(v) = |{x_i >= v}| / n evaluated on the sorted unique support.
/// Rejects empty input.
SurvivalCurve survival_curve(std::span<const double> samples);

/// Sample median; even n uses the midpoint of the two central order
/// statistics. Rejects empty input.
double median(std::span<const double> samples);

struct GainEstimate {
  double g;        ///< median(with) / median(without)
  double ci_low;   ///< bootstrap 2.5th percentile
  double ci_high;  ///< bootstrap 97.5th percentile
  std::uint64_t n_with;
  std::uint64_t n_without;
};

/// Median-ratio gain with a seeded percentile bootstrap (each arm resampled
/// independently). Rejects empty arms and a zero without-arm median.
GainEstimate gain_estimate(std::span<const double> with_fb,
                           std::span<const double> without_fb,
                           std::size_t n_boot, std::uint64_t seed);

struct KsResult {
  double d;  ///< sup of |ECDF_a - ECDF_b|, ties handled by weight
  double p;  ///< asymptotic significance, clamped to (0, 1]
};

/// Two-sample Kolmogorov-Smirnov test. With n_e = |a||b|/(|a|+|b|), the
/// significance is Q_KS((sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * d) where
/// Q_KS(x) = 2*sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2), truncated when a term
/// drops below 1e-12 in magnitude or after 100 terms. Requires at least 4
/// samples per side for the asymptotic form to hold.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Permutation p-value for the same D statistic, for cross-checking the
/// asymptotic form on small samples.
double ks_permutation_p(std::span<const double> a, std::span<const double> b,
                        std::size_t n_perm, std::uint64_t seed);

/// Expected photostability enhancement: the ratio mean_tau_t / tau_d,
/// returned raw (no saturation near 1 for large tau_d). Rejects non-positive
/// inputs.
double predicted_gain(double mean_tau_t, double tau_d);

}  // namespace qjf
