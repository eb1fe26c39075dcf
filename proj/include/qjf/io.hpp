#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qjf/config.hpp"
#include "qjf/ensemble.hpp"
#include "qjf/feedback.hpp"
#include "qjf/photophysics.hpp"
#include "qjf/stats.hpp"

namespace qjf {

/// Timestamps and durations print with 17 significant digits (value-exact
/// for doubles), probabilities with 6.
std::string format_time(double v);
std::string format_probability(double v);

/// Writes via a temp file in the same directory plus an atomic rename.
void write_file_atomic(const std::string& path, const std::string& content);

enum class EventKind : std::uint8_t { Photon, GateOn, GateOff, Bleach };

struct EventRecord {
  double t;
  EventKind kind;
};

/// Flattens a trajectory into a single time-ordered event stream
/// (photons sort before gate edges at equal timestamps).
std::vector<EventRecord> trajectory_events(const Trajectory& trajectory);

/// JSON-lines: one {"t": seconds, "kind": "photon"|"gate_on"|"gate_off"|"bleach"}
/// per line.
std::string events_to_jsonl(const std::vector<EventRecord>& events);
std::vector<EventRecord> events_from_jsonl(const std::string& text);

/// Half-open bins [k*w, (k+1)*w) over [0, trace_end); trailing empty bins are
/// emitted explicitly. Rejects a non-positive bin width.
std::vector<std::pair<double, std::uint64_t>> bin_trace(
    const std::vector<double>& photon_times, double bin_width, double trace_end);

/// Header comment block with the master seed and full resolved config, so
/// every artifact can be regenerated bit-exactly. Prepended verbatim to the
/// CSV writers below.
std::string artifact_header(const RunConfig& config);

std::string trials_to_csv(const std::string& header, const std::vector<TrialResult>& trials,
                          const std::string& arm);
std::vector<TrialResult> trials_from_csv(const std::string& text);

std::string gain_table_to_csv(const std::string& header, const GainTable& table);
std::string gate_commands_to_csv(const std::string& header,
                                 const std::vector<GateCommand>& commands);
std::string survival_to_csv(const std::string& header, const SurvivalCurve& curve);
std::string binned_trace_to_csv(const std::string& header,
                                const std::vector<std::pair<double, std::uint64_t>>& bins);

/// One-timestamp-per-line photon stream (scientific notation accepted).
std::vector<double> photon_times_from_text(const std::string& text);

}  // namespace qjf
