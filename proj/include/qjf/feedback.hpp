#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qjf {

enum class GateLevel : std::uint8_t { Off, On };

/// Parameters of the quantum-jump feedback loop: if no photon is detected for
/// tau_d, the excitation gate is switched off for tau_off. Both edges are
/// delayed by the actuator response time.
struct FeedbackConfig {
  double tau_d = 70e-6;     ///< no-photon decision window [s]
  double tau_off = 400e-6;  ///< gate-off (blanking) duration [s]
  double latency = 600e-9;  ///< actuator response delay [s]
  bool enabled = true;

  /// Throws std::invalid_argument naming the violated bound.
  void validate() const;

  bool operator==(const FeedbackConfig&) const = default;
};

/// A scheduled actuation of the optical gate.
struct GateCommand {
  double actuate_at;  ///< decision time + latency
  GateLevel level;
};

enum class ControllerPhase : std::uint8_t { Monitoring, Blanked };

struct ControllerState {
  ControllerPhase phase = ControllerPhase::Monitoring;
  /// Window expiry (Monitoring) or gate-restore decision time (Blanked).
  /// Empty when the loop is disabled: no deadline ever fires.
  std::optional<double> deadline;
  GateLevel last_command = GateLevel::On;
  double last_event_time = 0.0;

  // Diagnostics.
  std::uint64_t ignored_photons = 0;   ///< photons that arrived while blanked
  std::uint64_t windows_opened = 0;    ///< monitoring windows started
  std::uint64_t windows_expired = 0;   ///< windows that ran out (OFF decisions)
};

/// Deterministic online state machine. Consumes timestamped detections,
/// emits latency-delayed gate commands.
///
/// Deadline bookkeeping (all left-to-right additions, kept bit-stable):
///   - monitoring window expires at d: OFF actuates at d + latency,
///     blanking ends (ON decision) at (d + latency) + tau_off
///   - blanking ends at d: ON actuates at d + latency, and the next window
///     expires at (d + latency) + tau_d -- the window restarts at gate
///     restoration, not at the last pre-blanking photon.
///   - a photon at t while monitoring moves the expiry to t + tau_d.
///
/// A photon and a deadline at the same timestamp: the photon wins
/// (observe_photon only auto-fires deadlines strictly before t).
class FeedbackController {
 public:
  FeedbackController(const FeedbackConfig& config, double t0);

  /// Deliver a detection at time t. Monitoring: resets the window, emits
  /// nothing of its own. Blanked: ignored (tallied). Deadlines that expired
  /// strictly before t are processed first; their commands are appended to
  /// `out`. Out-of-order timestamps are a hard error (stream corruption).
  void observe_photon(double t, std::vector<GateCommand>& out);

  /// Process every deadline <= t in order, appending emitted commands.
  void advance_to(double t, std::vector<GateCommand>& out);

  std::optional<double> next_deadline() const { return state_.deadline; }
  const ControllerState& state() const { return state_; }
  const FeedbackConfig& config() const { return config_; }

 private:
  void fire_deadlines(double bound, bool inclusive, std::vector<GateCommand>& out);
  void check_order(double t, const char* what) const;

  FeedbackConfig config_;
  ControllerState state_;
};

/// Offline verification path: folds a recorded photon stream through the
/// controller and returns the full command schedule. Pure function of its
/// inputs; two invocations with equal inputs are bit-identical. Commands
/// whose triggering decision falls at or before `horizon` are included.
/// Photons after `horizon` are dropped; unsorted input is rejected.
std::vector<GateCommand> replay(const FeedbackConfig& config,
                                const std::vector<double>& photon_times,
                                double horizon);

}  // namespace qjf
