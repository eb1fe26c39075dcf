#include "qjf/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qjf {

namespace {

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Photon: return "photon";
    case EventKind::GateOn: return "gate_on";
    case EventKind::GateOff: return "gate_off";
    case EventKind::Bleach: return "bleach";
  }
  return "?";
}

EventKind kind_from_name(const std::string& name) {
  if (name == "photon") return EventKind::Photon;
  if (name == "gate_on") return EventKind::GateOn;
  if (name == "gate_off") return EventKind::GateOff;
  if (name == "bleach") return EventKind::Bleach;
  throw std::invalid_argument("unknown event kind '" + name + "'");
}

double parse_double_token(const std::string& token, int lineno, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw std::invalid_argument("line " + std::to_string(lineno) + ": bad " + what +
                                " '" + token + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string format_time(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_probability(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::vector<EventRecord> trajectory_events(const Trajectory& trajectory) {
  std::vector<EventRecord> events;
  events.reserve(trajectory.photon_times.size() + trajectory.gate_events.size() + 1);
  std::size_t ip = 0, ig = 0;
  const auto& ph = trajectory.photon_times;
  const auto& gt = trajectory.gate_events;
  while (ip < ph.size() || ig < gt.size()) {
    const bool take_photon =
        ip < ph.size() && (ig >= gt.size() || ph[ip] <= gt[ig].t);
    if (take_photon) {
      events.push_back({ph[ip++], EventKind::Photon});
    } else {
      events.push_back({gt[ig].t, gt[ig].level == GateLevel::On ? EventKind::GateOn
                                                                : EventKind::GateOff});
      ++ig;
    }
  }
  if (trajectory.bleach_time)
    events.push_back({*trajectory.bleach_time, EventKind::Bleach});
  return events;
}

std::string events_to_jsonl(const std::vector<EventRecord>& events) {
  std::ostringstream os;
  for (const auto& e : events)
    os << "{\"t\":" << format_time(e.t) << ",\"kind\":\"" << kind_name(e.kind) << "\"}\n";
  return os.str();
}

std::vector<EventRecord> events_from_jsonl(const std::string& text) {
  std::vector<EventRecord> events;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("events line " + std::to_string(lineno) + ": " + e.what());
    }
    events.push_back({j.at("t").get<double>(), kind_from_name(j.at("kind").get<std::string>())});
  }
  return events;
}

std::vector<std::pair<double, std::uint64_t>> bin_trace(
    const std::vector<double>& photon_times, double bin_width, double trace_end) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_trace: bin width must be > 0");
  if (!(trace_end >= 0.0)) throw std::invalid_argument("bin_trace: trace end must be >= 0");
  std::size_t n_bins = static_cast<std::size_t>(std::ceil(trace_end / bin_width));
  for (double t : photon_times) {
    const auto idx = static_cast<std::size_t>(t / bin_width);
    n_bins = std::max(n_bins, idx + 1);
  }
  std::vector<std::pair<double, std::uint64_t>> bins(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    bins[k] = {static_cast<double>(k) * bin_width, 0};
  for (double t : photon_times) ++bins[static_cast<std::size_t>(t / bin_width)].second;
  return bins;
}

std::string artifact_header(const RunConfig& config) {
  std::ostringstream os;
  os << "# master_seed = " << config.ensemble.master_seed << "\n";
  std::istringstream cfg(serialize_config(config));
  std::string line;
  os << "# config_begin\n";
  while (std::getline(cfg, line)) os << "#   " << line << "\n";
  os << "# config_end\n";
  return os.str();
}

std::string trials_to_csv(const std::string& header, const std::vector<TrialResult>& trials,
                          const std::string& arm) {
  std::ostringstream os;
  os << header;
  os << "molecule_index,tau_t_s,n_photons,survival_time_s,bleached,illuminated_triplet_s,arm\n";
  for (const auto& t : trials) {
    os << t.molecule_index << "," << format_time(t.tau_t_used) << "," << t.n_photons << ","
       << format_time(t.survival_time) << "," << (t.bleached ? 1 : 0) << ","
       << format_time(t.illuminated_triplet_time) << "," << arm << "\n";
  }
  return os.str();
}

std::vector<TrialResult> trials_from_csv(const std::string& text) {
  std::vector<TrialResult> trials;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 7)
      throw std::invalid_argument("trials CSV line " + std::to_string(lineno) +
                                  ": expected 7 fields, got " + std::to_string(f.size()));
    TrialResult t;
    t.molecule_index = static_cast<std::uint64_t>(parse_double_token(f[0], lineno, "index"));
    t.tau_t_used = parse_double_token(f[1], lineno, "tau_t");
    t.n_photons = static_cast<std::uint64_t>(parse_double_token(f[2], lineno, "n_photons"));
    t.survival_time = parse_double_token(f[3], lineno, "survival_time");
    t.bleached = parse_double_token(f[4], lineno, "bleached flag") != 0.0;
    t.illuminated_triplet_time = parse_double_token(f[5], lineno, "illuminated time");
    trials.push_back(t);
  }
  return trials;
}

std::string gain_table_to_csv(const std::string& header, const GainTable& table) {
  std::ostringstream os;
  os << header;
  for (const auto& w : table.warnings) os << "# warning: " << w << "\n";
  os << "tau_d_s,g_measured,g_predicted,ci_low,ci_high,n_with,n_without\n";
  for (const auto& r : table.rows) {
    os << format_time(r.tau_d) << "," << format_time(r.g_measured) << ","
       << format_time(r.g_predicted) << "," << format_time(r.ci_low) << ","
       << format_time(r.ci_high) << "," << r.n_with << "," << r.n_without << "\n";
  }
  return os.str();
}

std::string gate_commands_to_csv(const std::string& header,
                                 const std::vector<GateCommand>& commands) {
  std::ostringstream os;
  os << header;
  os << "actuate_at,level\n";
  for (const auto& c : commands)
    os << format_time(c.actuate_at) << "," << (c.level == GateLevel::On ? "ON" : "OFF")
       << "\n";
  return os.str();
}

std::string survival_to_csv(const std::string& header, const SurvivalCurve& curve) {
  std::ostringstream os;
  os << header;
  os << "value,probability\n";
  for (std::size_t i = 0; i < curve.support.size(); ++i)
    os << format_time(curve.support[i]) << "," << format_probability(curve.probability[i])
       << "\n";
  return os.str();
}

std::string binned_trace_to_csv(const std::string& header,
                                const std::vector<std::pair<double, std::uint64_t>>& bins) {
  std::ostringstream os;
  os << header;
  os << "bin_start_s,count\n";
  for (const auto& [start, count] : bins)
    os << format_time(start) << "," << count << "\n";
  return os.str();
}

std::vector<double> photon_times_from_text(const std::string& text) {
  std::vector<double> times;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(begin, end - begin + 1);
    if (token[0] == '#') continue;
    times.push_back(parse_double_token(token, lineno, "timestamp"));
  }
  return times;
}

}  // namespace qjf
