#include "qjf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qjf/random.hpp"

namespace qjf {

namespace {

double median_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> sorted_copy(std::span<const double> s) {
  std::vector<double> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

// Maximum ECDF distance over a merge walk of the two sorted samples. Both
// pointers advance through duplicates of the current value before the step
// difference is evaluated, so ties carry their full weight.
double ks_statistic_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double v = (i < a.size() && (j >= b.size() || a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_asymptotic_q(double x) {
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * x * x);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  const double p = 2.0 * sum;
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

SurvivalCurve survival_curve(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("survival_curve: empty sample");
  const std::vector<double> v = sorted_copy(samples);
  const double n = static_cast<double>(v.size());
  SurvivalCurve curve;
  for (std::size_t i = 0; i < v.size();) {
    const double value = v[i];
    curve.support.push_back(value);
    curve.probability.push_back((n - static_cast<double>(i)) / n);
    while (i < v.size() && v[i] == value) ++i;
  }
  return curve;
}

double median(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("median: empty sample");
  return median_sorted(sorted_copy(samples));
}

GainEstimate gain_estimate(std::span<const double> with_fb,
                           std::span<const double> without_fb,
                           std::size_t n_boot, std::uint64_t seed) {
  if (with_fb.empty() || without_fb.empty())
    throw std::invalid_argument("gain_estimate: empty arm");
  const double m_without = median(without_fb);
  if (m_without == 0.0)
    throw std::invalid_argument("gain_estimate: without-arm median is zero");

  GainEstimate est;
  est.g = median(with_fb) / m_without;
  est.n_with = with_fb.size();
  est.n_without = without_fb.size();

  RngEngine rng(seed);
  std::vector<double> boots;
  boots.reserve(n_boot);
  std::vector<double> rw(with_fb.size()), rwo(without_fb.size());
  for (std::size_t b = 0; b < n_boot; ++b) {
    for (auto& x : rw) x = with_fb[uniform_index(rng, with_fb.size())];
    for (auto& x : rwo) x = without_fb[uniform_index(rng, without_fb.size())];
    std::sort(rw.begin(), rw.end());
    std::sort(rwo.begin(), rwo.end());
    const double denom = median_sorted(rwo);
    boots.push_back(denom == 0.0 ? std::numeric_limits<double>::infinity()
                                 : median_sorted(rw) / denom);
  }
  std::sort(boots.begin(), boots.end());
  auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(boots.size() - 1);
    return boots[static_cast<std::size_t>(std::llround(pos))];
  };
  est.ci_low = percentile(0.025);
  est.ci_high = percentile(0.975);
  return est;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 4 || b.size() < 4)
    throw std::invalid_argument("ks_two_sample: need at least 4 samples per side");
  const std::vector<double> sa = sorted_copy(a);
  const std::vector<double> sb = sorted_copy(b);
  const double d = ks_statistic_sorted(sa, sb);
  if (d == 0.0) return {0.0, 1.0};
  const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                    static_cast<double>(a.size() + b.size());
  const double x = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  return {d, ks_asymptotic_q(x)};
}

double ks_permutation_p(std::span<const double> a, std::span<const double> b,
                        std::size_t n_perm, std::uint64_t seed) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("ks_permutation_p: need at least 2 samples per side");
  const std::vector<double> sa = sorted_copy(a);
  const std::vector<double> sb = sorted_copy(b);
  const double d_obs = ks_statistic_sorted(sa, sb);

  std::vector<double> pool(sa);
  pool.insert(pool.end(), sb.begin(), sb.end());
  RngEngine rng(seed);
  std::size_t hits = 0;
  std::vector<double> pa(a.size()), pb(b.size());
  for (std::size_t r = 0; r < n_perm; ++r) {
    // Fisher-Yates on the pooled values, then split.
    for (std::size_t i = pool.size() - 1; i > 0; --i)
      std::swap(pool[i], pool[uniform_index(rng, i + 1)]);
    pa.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(a.size()));
    pb.assign(pool.begin() + static_cast<std::ptrdiff_t>(a.size()), pool.end());
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    if (ks_statistic_sorted(pa, pb) >= d_obs) ++hits;
  }
  // Add-one correction keeps the permutation p strictly positive.
  return (static_cast<double>(hits) + 1.0) / (static_cast<double>(n_perm) + 1.0);
}

double predicted_gain(double mean_tau_t, double tau_d) {
  if (!(mean_tau_t > 0.0) || !(tau_d > 0.0))
    throw std::invalid_argument("predicted_gain: durations must be > 0");
  return mean_tau_t / tau_d;
}

}  // namespace qjf
