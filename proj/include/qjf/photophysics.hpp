#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qjf/feedback.hpp"
#include "qjf/random.hpp"

namespace qjf {

/// Rate constants of the three-level emitter (S0, S1, T1) plus the
/// triplet-gated photobleaching hazard. Rates are per second, durations in
/// seconds. `eta` folds radiative yield and collection efficiency into a
/// single detection probability per S1->S0 decay; only the detected photon
/// stream is observable.
struct PhotophysicsParams {
  double k_exc = 1e8;      ///< S0->S1 excitation rate while the gate is ON
  double k_fl = 1e8;       ///< S1->S0 decay rate (gate-independent)
  double k_isc = 1e5;      ///< S1->T1 intersystem-crossing rate (gate-independent)
  double tau_t = 240e-6;   ///< triplet lifetime; T1->S0 rate is 1/tau_t
  double eta = 0.03;       ///< detection probability per S1->S0 decay, in [0,1]
  double k_bleach = 0.8;   ///< bleach hazard, active only while T1 AND gate ON
  double dark_rate = 0.0;  ///< detector false counts per second (feed the controller)

  /// Hard constraint check; throws std::invalid_argument.
  void validate() const;

  /// Soft advisories (e.g. triplet lifetime not well separated from the
  /// fluorescence timescale). Empty when nothing is suspicious.
  std::vector<std::string> warnings() const;

  bool operator==(const PhotophysicsParams&) const = default;
};

enum class EmitterState : std::uint8_t { S0, S1, T1, Bleached };

enum class TransitionKind : std::uint8_t { Excite, Decay, Isc, Relax, Bleach };

struct Channel {
  TransitionKind kind;
  double rate;
};

/// The transition channels enabled in a given (state, gate) configuration.
/// The set is structural: channels with zero configured rate are listed.
/// Rejects the absorbing Bleached state.
std::vector<Channel> active_channels(EmitterState state, GateLevel gate,
                                     const PhotophysicsParams& params);

struct Occupancy {
  double p0, p1, pT;
};

/// Stationary occupancies of the gate-ON chain with the bleach channel
/// excluded. Closed form from the balance equations
/// k_exc*p0 = (k_fl+k_isc)*p1 and pT = k_isc*tau_t*p1.
Occupancy steady_state_occupancy(const PhotophysicsParams& params);

/// Mean detected-photon rate R = eta*k_fl*p1 at steady state. The mean
/// interval between consecutive detections is 1/R.
double detected_photon_rate(const PhotophysicsParams& params);

struct GateEvent {
  double t;
  GateLevel level;
};

/// Timestamped record of one molecule's life until photobleaching or the
/// simulation horizon. Gate events alternate starting with (0, On); no
/// detected photon falls inside a gate-off interval.
struct Trajectory {
  std::vector<double> photon_times;     ///< detected molecule photons only
  std::vector<GateEvent> gate_events;
  std::optional<double> bleach_time;    ///< set iff absorbed into Bleached
  double end_time = 0.0;                ///< bleach_time or the horizon
  double illuminated_triplet_time = 0.0;  ///< accumulated T1 AND gate-ON time

  // Diagnostics.
  std::uint64_t triplet_visits = 0;  ///< number of S1->T1 jumps
  std::uint64_t dark_counts = 0;     ///< false detections (not in photon_times)
  /// Occupancy accounting. Exact path: {S0, S1, T1}. Aggregated path lumps
  /// the singlet cycle: {cycling, 0, T1}.
  double state_time[3] = {0.0, 0.0, 0.0};
};

/// Per-molecule summary used by ensembles and the statistics pipeline.
struct TrialResult {
  std::uint64_t molecule_index = 0;
  std::uint64_t n_photons = 0;
  double survival_time = 0.0;  ///< wall clock from t=0, gate-off periods included
  bool bleached = false;
  double tau_t_used = 0.0;
  double illuminated_triplet_time = 0.0;
  std::uint64_t triplet_visits = 0;
};

/// Event-by-event simulation of the full chain: within each
/// piecewise-constant-rate segment an exponential waiting time is sampled at
/// the total active rate; controller deadlines and gate actuations cut
/// segments short (resampling afterwards is valid by memorylessness). Every
/// S1->S0 decay under an open gate is detected with probability eta and
/// delivered to the controller at its timestamp. `horizon` may be infinite;
/// a zero-rate state with nothing pending then raises a stalled-simulation
/// error.
Trajectory simulate_trajectory_exact(const PhotophysicsParams& params,
                                     const FeedbackConfig& feedback,
                                     RngEngine& rng, double horizon);

/// Fast path for the regime k_exc, k_fl >> k_isc, 1/tau_t: the singlet cycle
/// is aggregated into a macro-state emitting detected photons as a Poisson
/// process at rate eta*k_fl*p1* and ISC events at k_isc*p1*, with
/// p1* = k_exc/(k_exc+k_fl). Triplet dwells are exponential, the bleach
/// hazard applies while (T1 AND gate ON), and controller deadlines interleave
/// exactly as in the exact path. Refuses (throws) unless
/// k_isc < 0.01*(k_exc+k_fl); use the exact path instead.
Trajectory simulate_trajectory_aggregated(const PhotophysicsParams& params,
                                          const FeedbackConfig& feedback,
                                          RngEngine& rng, double horizon);

/// Same dynamics and identical random stream consumption as the trajectory
/// functions, but only the summary is kept. With equal seeds,
/// simulate_trial(...).n_photons == |simulate_trajectory_*(...).photon_times|.
TrialResult simulate_trial(const PhotophysicsParams& params,
                           const FeedbackConfig& feedback, RngEngine& rng,
                           double horizon, bool aggregated);

/// Raised when no stochastic channel is active and no controller deadline or
/// horizon can unblock the simulation.
struct StalledSimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by the aggregated path when its quasi-steady-state guard fails.
struct AggregationGuardError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace qjf
