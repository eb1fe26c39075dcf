#include "qjf/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>

#include "qjf/stats.hpp"

namespace qjf {

LifetimeDistribution LifetimeDistribution::fixed(double tau) {
  LifetimeDistribution d;
  d.kind = Kind::Fixed;
  d.fixed_tau = tau;
  return d;
}

LifetimeDistribution LifetimeDistribution::lognormal(double median_tau, double sigma_log) {
  LifetimeDistribution d;
  d.kind = Kind::LogNormal;
  d.median_tau = median_tau;
  d.sigma_log = sigma_log;
  return d;
}

LifetimeDistribution LifetimeDistribution::empirical(std::vector<double> values) {
  LifetimeDistribution d;
  d.kind = Kind::Empirical;
  d.values = std::move(values);
  return d;
}

void LifetimeDistribution::validate() const {
  switch (kind) {
    case Kind::Fixed:
      if (!(fixed_tau > 0.0)) throw std::invalid_argument("lifetime: fixed tau must be > 0");
      break;
    case Kind::LogNormal:
      if (!(median_tau > 0.0))
        throw std::invalid_argument("lifetime: lognormal median must be > 0");
      if (!(sigma_log > 0.0))
        throw std::invalid_argument("lifetime: lognormal sigma_log must be > 0");
      break;
    case Kind::Empirical:
      if (values.empty()) throw std::invalid_argument("lifetime: empirical list is empty");
      for (double v : values)
        if (!(v > 0.0))
          throw std::invalid_argument("lifetime: empirical lifetimes must be > 0");
      break;
  }
}

double LifetimeDistribution::sample(RngEngine& rng) const {
  switch (kind) {
    case Kind::Fixed:
      return fixed_tau;
    case Kind::LogNormal:
      return std::exp(std::log(median_tau) + sigma_log * standard_normal(rng));
    case Kind::Empirical:
      return values[uniform_index(rng, values.size())];
  }
  return fixed_tau;
}

double LifetimeDistribution::central_value() const {
  switch (kind) {
    case Kind::Fixed:
      return fixed_tau;
    case Kind::LogNormal:
      return median_tau;
    case Kind::Empirical: {
      return median(values);
    }
  }
  return fixed_tau;
}

void EnsembleConfig::validate() const {
  if (n_molecules < 1) throw std::invalid_argument("ensemble: n_molecules must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("ensemble: horizon must be > 0");
  if (!(min_detected_rate >= 0.0))
    throw std::invalid_argument("ensemble: min_rate must be >= 0");
  params.validate();
  feedback.validate();
  lifetime.validate();
}

EnsembleResult run_ensemble(const EnsembleConfig& config, unsigned jobs) {
  config.validate();
  const std::uint64_t n = config.n_molecules;
  const std::uint64_t arm_stream =
      config.feedback.enabled ? kStreamArmWith : kStreamArmWithout;

  std::vector<std::optional<TrialResult>> slots(n);

  auto simulate_one = [&](std::uint64_t i) {
    RngEngine lifetime_rng(derive_seed(config.master_seed, i, kStreamLifetime));
    PhotophysicsParams params = config.params;
    params.tau_t = config.lifetime.sample(lifetime_rng);
    if (config.min_detected_rate > 0.0 &&
        detected_photon_rate(params) < config.min_detected_rate)
      return;  // below the admission rule; excluded from both arms alike
    RngEngine rng(derive_seed(config.master_seed, i, arm_stream));
    TrialResult trial =
        simulate_trial(params, config.feedback, rng, config.horizon, config.aggregated);
    trial.molecule_index = i;
    slots[i] = trial;
  };

  if (jobs == 0) jobs = std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::uint64_t i = 0; i < n; ++i) simulate_one(i);
  } else {
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
      for (std::uint64_t i; (i = next.fetch_add(1)) < n;) simulate_one(i);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EnsembleResult result;
  result.trials.reserve(n);
  for (auto& slot : slots)
    if (slot) result.trials.push_back(*slot);

  const std::uint64_t excluded = n - result.trials.size();
  if (excluded > 0)
    result.warnings.push_back(std::to_string(excluded) +
                              " molecule(s) excluded by the detected-rate admission rule");
  std::uint64_t censored = 0;
  for (const auto& t : result.trials)
    if (!t.bleached) ++censored;
  if (!result.trials.empty() && 2 * censored > result.trials.size())
    result.warnings.push_back(
        "horizon reached by more than half the molecules; censored statistics "
        "distort medians");
  return result;
}

GainTable sweep_tau_d(const EnsembleConfig& base, const std::vector<double>& tau_d_values,
                      std::size_t n_boot, unsigned jobs, const SweepArmObserver& on_arm) {
  if (tau_d_values.empty())
    throw std::invalid_argument("sweep_tau_d: need at least one tau_d value");
  base.validate();

  GainTable table;
  const double central_tau = base.lifetime.central_value();
  const double tau_fluo_params = [&] {
    PhotophysicsParams p = base.params;
    p.tau_t = central_tau;
    const double r = detected_photon_rate(p);
    return r > 0.0 ? 1.0 / r : std::numeric_limits<double>::infinity();
  }();

  for (std::size_t row = 0; row < tau_d_values.size(); ++row) {
    const double tau_d = tau_d_values[row];
    try {
      if (tau_d <= tau_fluo_params)
        table.warnings.push_back("tau_d = " + std::to_string(tau_d) +
                                 " s is not above the mean detection interval; expect "
                                 "permanent gate switching");

      EnsembleConfig with_cfg = base;
      with_cfg.feedback.tau_d = tau_d;
      with_cfg.feedback.enabled = base.feedback.enabled;
      EnsembleConfig without_cfg = with_cfg;
      without_cfg.feedback.enabled = false;

      const EnsembleResult with_run = run_ensemble(with_cfg, jobs);
      const EnsembleResult without_run = run_ensemble(without_cfg, jobs);
      if (on_arm) {
        on_arm(row, true, with_run);
        on_arm(row, false, without_run);
      }
      for (const auto& w : with_run.warnings) table.warnings.push_back(w);
      for (const auto& w : without_run.warnings) table.warnings.push_back(w);

      auto uncensored_counts = [](const EnsembleResult& r) {
        std::vector<double> n;
        n.reserve(r.trials.size());
        for (const auto& t : r.trials)
          if (t.bleached) n.push_back(static_cast<double>(t.n_photons));
        return n;
      };
      const std::vector<double> with_n = uncensored_counts(with_run);
      const std::vector<double> without_n = uncensored_counts(without_run);

      const GainEstimate est =
          gain_estimate(with_n, without_n, n_boot,
                        derive_seed(base.master_seed, row, kStreamBootstrap));
      table.rows.push_back({tau_d, est.g, predicted_gain(central_tau, tau_d), est.ci_low,
                            est.ci_high, est.n_with, est.n_without});
    } catch (const std::exception& e) {
      table.warnings.push_back("tau_d = " + std::to_string(tau_d) +
                               " s: row failed: " + e.what());
    }
  }
  return table;
}

}  // namespace qjf
