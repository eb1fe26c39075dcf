#include "qjf/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qjf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string("photophysics: ") + name +
                                " must be finite and >= 0");
}

// Applies controller decisions and gate actuations in causal order. The
// simulation loop stops at every boundary this reports, so each process()
// call only ever handles the events of a single instant.
class GateDriver {
 public:
  explicit GateDriver(const FeedbackConfig& config) : controller_(config, 0.0) {}

  GateLevel level() const { return level_; }

  double next_boundary() const {
    double b = kInf;
    if (auto d = controller_.next_deadline()) b = *d;
    if (head_ < pending_.size()) b = std::min(b, pending_[head_].actuate_at);
    return b;
  }

  void photon(double t) { controller_.observe_photon(t, pending_); }

  template <class OnFlip>
  void process(double t, OnFlip&& on_flip) {
    controller_.advance_to(t, pending_);
    while (head_ < pending_.size() && pending_[head_].actuate_at <= t) {
      const GateCommand cmd = pending_[head_++];
      level_ = cmd.level;
      on_flip(cmd.actuate_at, cmd.level);
    }
    if (head_ == pending_.size()) {
      pending_.clear();
      head_ = 0;
    }
  }

 private:
  FeedbackController controller_;
  std::vector<GateCommand> pending_;
  std::size_t head_ = 0;
  GateLevel level_ = GateLevel::On;
};

struct CoreOutcome {
  std::optional<double> bleach_time;
  double end_time = 0.0;
  double illuminated = 0.0;
  std::uint64_t visits = 0;
  std::uint64_t darks = 0;
  double state_time[3] = {0.0, 0.0, 0.0};
};

// Recorders decide how much of the event stream is kept. They never touch
// the random stream, so summary and full runs replay identically.
struct CountingRecorder {
  std::uint64_t photons = 0;
  void photon(double) { ++photons; }
  void gate(double, GateLevel) {}
};

struct FullRecorder {
  Trajectory* out;
  std::uint64_t photons = 0;
  void photon(double t) {
    out->photon_times.push_back(t);
    ++photons;
  }
  void gate(double t, GateLevel level) { out->gate_events.push_back({t, level}); }
};

enum class Ev : std::uint8_t { Excite, Decay, Isc, Relax, Bleach, Photon, Dark };

template <class Rec>
CoreOutcome run_exact(const PhotophysicsParams& p, const FeedbackConfig& fb,
                      RngEngine& rng, double horizon, Rec& rec) {
  p.validate();
  fb.validate();
  if (std::isnan(horizon) || !(horizon > 0.0))
    throw std::invalid_argument("simulate: horizon must be > 0");

  GateDriver gate(fb);
  CoreOutcome out;
  rec.gate(0.0, GateLevel::On);

  double t = 0.0;
  EmitterState s = EmitterState::S0;
  const double k_relax = 1.0 / p.tau_t;

  auto account = [&](double to) {
    const double dt = to - t;
    if (s == EmitterState::T1) {
      out.state_time[2] += dt;
      if (gate.level() == GateLevel::On) out.illuminated += dt;
    } else if (s == EmitterState::S0) {
      out.state_time[0] += dt;
    } else {
      out.state_time[1] += dt;
    }
    t = to;
  };

  while (true) {
    Ev kinds[4];
    double rates[4];
    int n = 0;
    const bool on = gate.level() == GateLevel::On;
    if (s == EmitterState::S0) {
      if (on) {
        kinds[n] = Ev::Excite;
        rates[n++] = p.k_exc;
      }
    } else if (s == EmitterState::S1) {
      kinds[n] = Ev::Decay;
      rates[n++] = p.k_fl;
      kinds[n] = Ev::Isc;
      rates[n++] = p.k_isc;
    } else {
      kinds[n] = Ev::Relax;
      rates[n++] = k_relax;
      if (on) {
        kinds[n] = Ev::Bleach;
        rates[n++] = p.k_bleach;
      }
    }
    if (p.dark_rate > 0.0) {
      kinds[n] = Ev::Dark;
      rates[n++] = p.dark_rate;
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += rates[i];

    const double boundary = gate.next_boundary();
    const double stop = std::min(boundary, horizon);
    if (!(total > 0.0) && stop == kInf)
      throw StalledSimulationError(
          "simulation stalled: no active channel, no pending deadline, no horizon");

    const double t_event = total > 0.0 ? t + exponential(rng, total) : kInf;
    if (t_event <= stop) {
      // Stochastic transition; on an exact deadline tie the photon wins.
      account(t_event);
      const double u = uniform01(rng) * total;
      int pick = 0;
      for (double cum = rates[0]; pick + 1 < n && u >= cum; cum += rates[++pick]) {}
      switch (kinds[pick]) {
        case Ev::Excite:
          s = EmitterState::S1;
          break;
        case Ev::Decay:
          s = EmitterState::S0;
          // A decay under a closed gate still relaxes the molecule, but the
          // detection channel is gated with the laser.
          if (on && uniform01(rng) < p.eta) {
            rec.photon(t);
            gate.photon(t);
          }
          break;
        case Ev::Isc:
          s = EmitterState::T1;
          ++out.visits;
          break;
        case Ev::Relax:
          s = EmitterState::S0;
          break;
        case Ev::Bleach:
          out.bleach_time = t;
          out.end_time = t;
          return out;
        case Ev::Dark:
          ++out.darks;
          gate.photon(t);
          break;
        case Ev::Photon:
          break;  // not emitted by the exact path
      }
    } else if (boundary < horizon) {
      account(boundary);
      gate.process(boundary, [&](double at, GateLevel level) { rec.gate(at, level); });
    } else {
      account(horizon);
      out.end_time = horizon;
      return out;
    }
  }
}

template <class Rec>
CoreOutcome run_aggregated(const PhotophysicsParams& p, const FeedbackConfig& fb,
                           RngEngine& rng, double horizon, Rec& rec) {
  p.validate();
  fb.validate();
  if (std::isnan(horizon) || !(horizon > 0.0))
    throw std::invalid_argument("simulate: horizon must be > 0");
  if (!(p.k_isc < 0.01 * (p.k_exc + p.k_fl)))
    throw AggregationGuardError(
        "aggregated path requires k_isc < 0.01*(k_exc+k_fl); use the exact path");

  const double p1_star = p.k_exc / (p.k_exc + p.k_fl);
  const double photon_rate = p.eta * p.k_fl * p1_star;
  const double isc_rate = p.k_isc * p1_star;
  const double k_relax = 1.0 / p.tau_t;

  GateDriver gate(fb);
  CoreOutcome out;
  rec.gate(0.0, GateLevel::On);

  double t = 0.0;
  bool in_triplet = false;

  auto account = [&](double to) {
    const double dt = to - t;
    if (in_triplet) {
      out.state_time[2] += dt;
      if (gate.level() == GateLevel::On) out.illuminated += dt;
    } else {
      out.state_time[0] += dt;  // aggregated singlet cycling
    }
    t = to;
  };

  while (true) {
    Ev kinds[3];
    double rates[3];
    int n = 0;
    const bool on = gate.level() == GateLevel::On;
    if (!in_triplet) {
      if (on) {
        kinds[n] = Ev::Photon;
        rates[n++] = photon_rate;
        kinds[n] = Ev::Isc;
        rates[n++] = isc_rate;
      }
    } else {
      kinds[n] = Ev::Relax;
      rates[n++] = k_relax;
      if (on) {
        kinds[n] = Ev::Bleach;
        rates[n++] = p.k_bleach;
      }
    }
    if (p.dark_rate > 0.0) {
      kinds[n] = Ev::Dark;
      rates[n++] = p.dark_rate;
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += rates[i];

    const double boundary = gate.next_boundary();
    const double stop = std::min(boundary, horizon);
    if (!(total > 0.0) && stop == kInf)
      throw StalledSimulationError(
          "simulation stalled: no active channel, no pending deadline, no horizon");

    const double t_event = total > 0.0 ? t + exponential(rng, total) : kInf;
    if (t_event <= stop) {
      account(t_event);
      const double u = uniform01(rng) * total;
      int pick = 0;
      for (double cum = rates[0]; pick + 1 < n && u >= cum; cum += rates[++pick]) {}
      switch (kinds[pick]) {
        case Ev::Photon:
          rec.photon(t);
          gate.photon(t);
          break;
        case Ev::Isc:
          in_triplet = true;
          ++out.visits;
          break;
        case Ev::Relax:
          in_triplet = false;
          break;
        case Ev::Bleach:
          out.bleach_time = t;
          out.end_time = t;
          return out;
        case Ev::Dark:
          ++out.darks;
          gate.photon(t);
          break;
        default:
          break;
      }
    } else if (boundary < horizon) {
      account(boundary);
      gate.process(boundary, [&](double at, GateLevel level) { rec.gate(at, level); });
    } else {
      account(horizon);
      out.end_time = horizon;
      return out;
    }
  }
}

void fill_trajectory(Trajectory& tr, const CoreOutcome& o) {
  tr.bleach_time = o.bleach_time;
  tr.end_time = o.end_time;
  tr.illuminated_triplet_time = o.illuminated;
  tr.triplet_visits = o.visits;
  tr.dark_counts = o.darks;
  for (int i = 0; i < 3; ++i) tr.state_time[i] = o.state_time[i];
}

}  // namespace

void PhotophysicsParams::validate() const {
  check_nonneg(k_exc, "k_exc");
  check_nonneg(k_fl, "k_fl");
  check_nonneg(k_isc, "k_isc");
  check_nonneg(k_bleach, "k_bleach");
  check_nonneg(dark_rate, "dark_rate");
  if (!(tau_t > 0.0) || !std::isfinite(tau_t))
    throw std::invalid_argument("photophysics: tau_t must be finite and > 0");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("photophysics: eta must lie in [0,1]");
}

std::vector<std::string> PhotophysicsParams::warnings() const {
  std::vector<std::string> w;
  if (k_fl <= 1.0 / tau_t)
    w.push_back(
        "k_fl <= 1/tau_t: the triplet lifetime is not well separated from the "
        "fluorescence cycle");
  return w;
}

std::vector<Channel> active_channels(EmitterState state, GateLevel gate,
                                     const PhotophysicsParams& params) {
  params.validate();
  if (state == EmitterState::Bleached)
    throw std::invalid_argument("active_channels: Bleached is absorbing");
  std::vector<Channel> channels;
  switch (state) {
    case EmitterState::S0:
      if (gate == GateLevel::On) channels.push_back({TransitionKind::Excite, params.k_exc});
      break;
    case EmitterState::S1:
      channels.push_back({TransitionKind::Decay, params.k_fl});
      channels.push_back({TransitionKind::Isc, params.k_isc});
      break;
    case EmitterState::T1:
      channels.push_back({TransitionKind::Relax, 1.0 / params.tau_t});
      if (gate == GateLevel::On)
        channels.push_back({TransitionKind::Bleach, params.k_bleach});
      break;
    case EmitterState::Bleached:
      break;
  }
  return channels;
}

Occupancy steady_state_occupancy(const PhotophysicsParams& params) {
  params.validate();
  if (!(params.k_exc > 0.0)) return {1.0, 0.0, 0.0};
  const double p1 = params.k_exc / (params.k_exc + params.k_fl + params.k_isc +
                                    params.k_exc * params.k_isc * params.tau_t);
  const double pT = params.k_isc * params.tau_t * p1;
  return {1.0 - p1 - pT, p1, pT};
}

double detected_photon_rate(const PhotophysicsParams& params) {
  return params.eta * params.k_fl * steady_state_occupancy(params).p1;
}

Trajectory simulate_trajectory_exact(const PhotophysicsParams& params,
                                     const FeedbackConfig& feedback,
                                     RngEngine& rng, double horizon) {
  Trajectory tr;
  FullRecorder rec{&tr};
  fill_trajectory(tr, run_exact(params, feedback, rng, horizon, rec));
  return tr;
}

Trajectory simulate_trajectory_aggregated(const PhotophysicsParams& params,
                                          const FeedbackConfig& feedback,
                                          RngEngine& rng, double horizon) {
  Trajectory tr;
  FullRecorder rec{&tr};
  fill_trajectory(tr, run_aggregated(params, feedback, rng, horizon, rec));
  return tr;
}

TrialResult simulate_trial(const PhotophysicsParams& params,
                           const FeedbackConfig& feedback, RngEngine& rng,
                           double horizon, bool aggregated) {
  CountingRecorder rec;
  const CoreOutcome o = aggregated ? run_aggregated(params, feedback, rng, horizon, rec)
                                   : run_exact(params, feedback, rng, horizon, rec);
  TrialResult r;
  r.n_photons = rec.photons;
  r.survival_time = o.end_time;
  r.bleached = o.bleach_time.has_value();
  r.tau_t_used = params.tau_t;
  r.illuminated_triplet_time = o.illuminated;
  r.triplet_visits = o.visits;
  return r;
}

}  // namespace qjf
