#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qjf/photophysics.hpp"
#include "qjf/random.hpp"

namespace qjf {

/// Per-molecule triplet-lifetime statistics. The lognormal form is
/// parameterized by its median and log-sd; molecules sampled from it cover
/// the short-lifetime tail that a fixed lifetime cannot.
struct LifetimeDistribution {
  enum class Kind : std::uint8_t { Fixed, LogNormal, Empirical };

  Kind kind = Kind::Fixed;
  double fixed_tau = 240e-6;     ///< Fixed: the constant lifetime [s]
  double median_tau = 240e-6;    ///< LogNormal: exp(mu_log) [s]
  double sigma_log = 0.8;        ///< LogNormal: sd of log-lifetime
  std::vector<double> values;    ///< Empirical: drawn uniformly

  static LifetimeDistribution fixed(double tau);
  static LifetimeDistribution lognormal(double median_tau, double sigma_log);
  static LifetimeDistribution empirical(std::vector<double> values);

  void validate() const;
  double sample(RngEngine& rng) const;

  /// Representative lifetime used for the model prediction: the constant
  /// (Fixed), the median (LogNormal), or the sample median (Empirical).
  double central_value() const;

  bool operator==(const LifetimeDistribution&) const = default;
};

struct EnsembleConfig {
  std::uint64_t n_molecules = 56;
  PhotophysicsParams params;  ///< tau_t is overridden per molecule
  LifetimeDistribution lifetime;
  FeedbackConfig feedback;
  double horizon = 600.0;  ///< simulated seconds per molecule
  std::uint64_t master_seed = 42;
  /// Optional admission rule: molecules whose steady-state detected rate
  /// falls below this are excluded (0 disables the filter).
  double min_detected_rate = 0.0;
  bool aggregated = true;  ///< trajectory path selection

  void validate() const;

  bool operator==(const EnsembleConfig&) const = default;
};

struct EnsembleResult {
  std::vector<TrialResult> trials;  ///< ordered by molecule index
  std::vector<std::string> warnings;
};

/// Runs n_molecules independent trajectories with per-molecule lifetimes and
/// seeds derived from (master_seed, index), so results are identical for any
/// jobs count (0 = all cores) and any execution order. The lifetime stream
/// is independent of the arm: two runs differing only in feedback.enabled
/// share lifetimes per molecule index. Warns when more than half the
/// molecules are censored by the horizon.
EnsembleResult run_ensemble(const EnsembleConfig& config, unsigned jobs = 1);

struct GainRow {
  double tau_d;
  double g_measured;
  double g_predicted;
  double ci_low;
  double ci_high;
  std::uint64_t n_with;
  std::uint64_t n_without;
};

struct GainTable {
  std::vector<GainRow> rows;
  std::vector<std::string> warnings;
};

/// Observer for the raw per-arm results of a sweep row (row index, whether
/// the feedback arm, results). Lets callers persist trials without a second
/// run.
using SweepArmObserver =
    std::function<void(std::size_t, bool, const EnsembleResult&)>;

/// Paired ensembles per tau_d value. Both arms reuse the base master seed
/// (shared lifetime draws, separate trajectory streams); the gain is the
/// bootstrap median ratio of photon counts over uncensored molecules, and
/// the prediction is central lifetime / tau_d. Per-row failures are recorded
/// as warnings without aborting the sweep.
GainTable sweep_tau_d(const EnsembleConfig& base, const std::vector<double>& tau_d_values,
                      std::size_t n_boot = 2000, unsigned jobs = 1,
                      const SweepArmObserver& on_arm = {});

}  // namespace qjf
