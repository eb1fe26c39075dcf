#include "qjf/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qjf {

void FeedbackConfig::validate() const {
  if (!(tau_d > 0.0) || !std::isfinite(tau_d))
    throw std::invalid_argument("feedback: tau_d must be > 0");
  if (!(tau_off > 0.0) || !std::isfinite(tau_off))
    throw std::invalid_argument("feedback: tau_off must be > 0");
  if (!(latency >= 0.0) || !std::isfinite(latency))
    throw std::invalid_argument("feedback: latency must be >= 0");
}

FeedbackController::FeedbackController(const FeedbackConfig& config, double t0)
    : config_(config) {
  config_.validate();
  state_.phase = ControllerPhase::Monitoring;
  state_.last_command = GateLevel::On;
  state_.last_event_time = t0;
  if (config_.enabled) {
    state_.deadline = t0 + config_.tau_d;
    state_.windows_opened = 1;
  }
}

void FeedbackController::check_order(double t, const char* what) const {
  if (t < state_.last_event_time)
    throw std::invalid_argument(std::string("feedback controller: out-of-order ") + what);
}

void FeedbackController::fire_deadlines(double bound, bool inclusive,
                                        std::vector<GateCommand>& out) {
  while (state_.deadline &&
         (inclusive ? *state_.deadline <= bound : *state_.deadline < bound)) {
    const double d = *state_.deadline;
    const double actuate_at = d + config_.latency;
    if (state_.phase == ControllerPhase::Monitoring) {
      out.push_back({actuate_at, GateLevel::Off});
      state_.last_command = GateLevel::Off;
      state_.phase = ControllerPhase::Blanked;
      state_.deadline = actuate_at + config_.tau_off;
      ++state_.windows_expired;
    } else {
      out.push_back({actuate_at, GateLevel::On});
      state_.last_command = GateLevel::On;
      state_.phase = ControllerPhase::Monitoring;
      state_.deadline = actuate_at + config_.tau_d;
      ++state_.windows_opened;
    }
    state_.last_event_time = d;
  }
}

void FeedbackController::observe_photon(double t, std::vector<GateCommand>& out) {
  check_order(t, "photon timestamp");
  if (!config_.enabled) {
    state_.last_event_time = t;
    return;
  }
  fire_deadlines(t, /*inclusive=*/false, out);
  if (state_.phase == ControllerPhase::Monitoring) {
    state_.deadline = t + config_.tau_d;
    ++state_.windows_opened;
  } else {
    ++state_.ignored_photons;
  }
  state_.last_event_time = t;
}

void FeedbackController::advance_to(double t, std::vector<GateCommand>& out) {
  check_order(t, "advance target");
  fire_deadlines(t, /*inclusive=*/true, out);
  state_.last_event_time = t;
}

std::vector<GateCommand> replay(const FeedbackConfig& config,
                                const std::vector<double>& photon_times,
                                double horizon) {
  if (!std::is_sorted(photon_times.begin(), photon_times.end()))
    throw std::invalid_argument("replay: photon timestamps must be sorted");
  FeedbackController controller(config, 0.0);
  std::vector<GateCommand> schedule;
  for (double t : photon_times) {
    if (t > horizon) break;
    controller.observe_photon(t, schedule);
  }
  controller.advance_to(horizon, schedule);
  return schedule;
}

}  // namespace qjf
