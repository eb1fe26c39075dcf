#include "qjf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "qjf/stats.hpp"

namespace qjf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("'" + text + "' is not a number");
  return value;
}

std::uint64_t parse_uint(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument("'" + text + "' is not a non-negative integer");
  return value;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw std::invalid_argument("'" + text + "' is not a boolean (true/false)");
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

double parse_duration(const std::string& text) {
  const std::string t = trim(text);
  static constexpr struct {
    const char* suffix;
    double factor;
  } kUnits[] = {{"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
  for (const auto& unit : kUnits) {
    const std::string suffix(unit.suffix);
    if (t.size() > suffix.size() && t.ends_with(suffix)) {
      const std::string num = t.substr(0, t.size() - suffix.size());
      // "ns"/"us"/"ms" are checked before the bare "s".
      if (suffix == "s" && !num.empty() && (num.back() == 'n' || num.back() == 'u' || num.back() == 'm'))
        continue;
      return parse_number(num) * unit.factor;
    }
  }
  throw std::invalid_argument("'" + text + "' is not a duration (expected e.g. 70us; suffixes ns, us, ms, s)");
}

double parse_rate(const std::string& text) {
  const std::string t = trim(text);
  if (t.ends_with("k/s")) return parse_number(t.substr(0, t.size() - 3)) * 1e3;
  if (t.ends_with("/s")) return parse_number(t.substr(0, t.size() - 2));
  throw std::invalid_argument("'" + text + "' is not a rate (expected e.g. 1e8/s or 30k/s)");
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&issues] {
        std::ostringstream os;
        os << "configuration rejected with " << issues.size() << " violation(s):";
        for (const auto& issue : issues) {
          os << "\n  ";
          if (issue.line > 0) os << "line " << issue.line << ": ";
          os << issue.message;
        }
        return os.str();
      }()),
      issues_(std::move(issues)) {}

std::vector<std::string> preset_names() { return {"dii", "terrylene"}; }

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  PhotophysicsParams& p = cfg.ensemble.params;
  FeedbackConfig& fb = cfg.ensemble.feedback;
  if (name == "dii") {
    cfg.preset_name = "dii";
    p = {1e8, 1e8, 1e5, 240e-6, 0.03, 0.8, 0.0};
    cfg.ensemble.lifetime = LifetimeDistribution::lognormal(240e-6, 0.8);
  } else if (name == "terrylene") {
    cfg.preset_name = "terrylene";
    p = {1e8, 1e8, 1e5, 217e-6, 0.03, 0.8, 0.0};
    cfg.ensemble.lifetime = LifetimeDistribution::lognormal(217e-6, 0.8);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (available: dii, terrylene)");
  }
  fb = {70e-6, 400e-6, 600e-9, true};
  cfg.ensemble.n_molecules = 56;
  cfg.ensemble.horizon = 600.0;
  cfg.ensemble.master_seed = 42;
  return cfg;
}

namespace {

struct ParseState {
  bool lifetime_kind_set = false;
  bool lifetime_tau_set = false;
};

using Setter = std::function<void(RunConfig&, ParseState&, const std::string&)>;

struct KeyHandler {
  const char* section;
  const char* key;
  Setter set;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::vector<double> parse_duration_list(const std::string& value) {
  std::vector<double> out;
  for (const auto& part : split(value, ',')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    out.push_back(parse_duration(item));
  }
  require(!out.empty(), "empty duration list");
  return out;
}

const std::vector<KeyHandler>& key_table() {
  static const std::vector<KeyHandler> table = {
      {"photophysics", "k_exc",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.k_exc = parse_rate(v);
         require(c.ensemble.params.k_exc >= 0.0, "k_exc must be >= 0");
       }},
      {"photophysics", "k_fl",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.k_fl = parse_rate(v);
         require(c.ensemble.params.k_fl >= 0.0, "k_fl must be >= 0");
       }},
      {"photophysics", "k_isc",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.k_isc = parse_rate(v);
         require(c.ensemble.params.k_isc >= 0.0, "k_isc must be >= 0");
       }},
      {"photophysics", "tau_t",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.tau_t = parse_duration(v);
         require(c.ensemble.params.tau_t > 0.0, "tau_t must be > 0");
       }},
      {"photophysics", "eta",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.eta = parse_number(v);
         require(c.ensemble.params.eta >= 0.0 && c.ensemble.params.eta <= 1.0,
                 "eta must lie in [0,1]");
       }},
      {"photophysics", "k_bleach",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.k_bleach = parse_rate(v);
         require(c.ensemble.params.k_bleach >= 0.0, "k_bleach must be >= 0");
       }},
      {"photophysics", "dark_rate",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.params.dark_rate = parse_rate(v);
         require(c.ensemble.params.dark_rate >= 0.0, "dark_rate must be >= 0");
       }},
      {"feedback", "enabled",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.feedback.enabled = parse_bool(v);
       }},
      {"feedback", "tau_d",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.feedback.tau_d = parse_duration(v);
         require(c.ensemble.feedback.tau_d > 0.0, "tau_d must be > 0");
       }},
      {"feedback", "tau_off",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.feedback.tau_off = parse_duration(v);
         require(c.ensemble.feedback.tau_off > 0.0, "tau_off must be > 0");
       }},
      {"feedback", "latency",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.feedback.latency = parse_duration(v);
         require(c.ensemble.feedback.latency >= 0.0, "latency must be >= 0");
       }},
      {"ensemble", "n_molecules",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.n_molecules = parse_uint(v);
         require(c.ensemble.n_molecules >= 1, "n_molecules must be >= 1");
       }},
      {"ensemble", "horizon",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.horizon = parse_duration(v);
         require(c.ensemble.horizon > 0.0, "horizon must be > 0");
       }},
      {"ensemble", "seed",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.master_seed = parse_uint(v);
       }},
      {"ensemble", "min_rate",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.min_detected_rate = parse_rate(v);
         require(c.ensemble.min_detected_rate >= 0.0, "min_rate must be >= 0");
       }},
      {"ensemble", "path",
       [](RunConfig& c, ParseState&, const std::string& v) {
         const std::string t = trim(v);
         if (t == "aggregated")
           c.ensemble.aggregated = true;
         else if (t == "exact")
           c.ensemble.aggregated = false;
         else
           throw std::invalid_argument("path must be 'aggregated' or 'exact'");
       }},
      {"ensemble", "lifetime",
       [](RunConfig& c, ParseState& st, const std::string& v) {
         const std::string t = trim(v);
         if (t == "fixed")
           c.ensemble.lifetime.kind = LifetimeDistribution::Kind::Fixed;
         else if (t == "lognormal")
           c.ensemble.lifetime.kind = LifetimeDistribution::Kind::LogNormal;
         else if (t == "empirical")
           c.ensemble.lifetime.kind = LifetimeDistribution::Kind::Empirical;
         else
           throw std::invalid_argument(
               "lifetime must be 'fixed', 'lognormal' or 'empirical'");
         st.lifetime_kind_set = true;
       }},
      {"ensemble", "lifetime_tau",
       [](RunConfig& c, ParseState& st, const std::string& v) {
         c.ensemble.lifetime.fixed_tau = parse_duration(v);
         require(c.ensemble.lifetime.fixed_tau > 0.0, "lifetime_tau must be > 0");
         st.lifetime_tau_set = true;
       }},
      {"ensemble", "lifetime_median",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.lifetime.median_tau = parse_duration(v);
         require(c.ensemble.lifetime.median_tau > 0.0, "lifetime_median must be > 0");
       }},
      {"ensemble", "lifetime_sigma_log",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.lifetime.sigma_log = parse_number(v);
         require(c.ensemble.lifetime.sigma_log > 0.0, "lifetime_sigma_log must be > 0");
       }},
      {"ensemble", "lifetime_values",
       [](RunConfig& c, ParseState&, const std::string& v) {
         c.ensemble.lifetime.values = parse_duration_list(v);
       }},
      {"ensemble", "lifetime_file",
       [](RunConfig& c, ParseState&, const std::string& v) {
         std::ifstream in(trim(v));
         if (!in) throw std::invalid_argument("cannot open lifetime file '" + trim(v) + "'");
         std::vector<double> values;
         std::string line;
         while (std::getline(in, line)) {
           const std::string item = trim(strip_comment(line));
           if (!item.empty()) values.push_back(parse_duration(item));
         }
         require(!values.empty(), "lifetime file holds no durations");
         c.ensemble.lifetime.values = std::move(values);
       }},
      {"output", "dir",
       [](RunConfig& c, ParseState&, const std::string& v) { c.out_dir = trim(v); }},
  };
  return table;
}

bool known_section(const std::string& s) {
  return s == "photophysics" || s == "feedback" || s == "ensemble" || s == "output";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  ParseState state;
  std::vector<ConfigIssue> issues;
  std::string section;
  bool section_ok = true;   // false inside an unknown section
  bool preset_allowed = true;
  int lineno = 0;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back({lineno, "malformed section header '" + line + "'"});
        section_ok = false;
      } else {
        section = trim(line.substr(1, line.size() - 2));
        section_ok = known_section(section);
        if (!section_ok)
          issues.push_back({lineno, "unknown section [" + section + "]"});
      }
      preset_allowed = false;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({lineno, "expected 'key = value', got '" + line + "'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section.empty() && key == "preset") {
      if (!preset_allowed) {
        issues.push_back({lineno, "preset must precede every section"});
      } else {
        try {
          cfg = preset_config(value);
          // Preset lifetimes are fully specified.
          state.lifetime_kind_set = true;
          state.lifetime_tau_set = true;
        } catch (const std::exception& e) {
          issues.push_back({lineno, e.what()});
        }
      }
      preset_allowed = false;
      continue;
    }
    preset_allowed = false;

    if (!section_ok) continue;  // already reported the section itself
    const auto& table = key_table();
    const KeyHandler* handler = nullptr;
    for (const auto& h : table)
      if (section == h.section && key == h.key) {
        handler = &h;
        break;
      }
    if (handler == nullptr) {
      issues.push_back(
          {lineno, "unknown key '" + key + "' in section [" + section + "]"});
      continue;
    }
    try {
      handler->set(cfg, state, value);
    } catch (const std::exception& e) {
      issues.push_back({lineno, key + ": " + e.what()});
    }
  }

  // A run without lifetime keys simulates the configured tau_t for every
  // molecule.
  if (!state.lifetime_kind_set)
    cfg.ensemble.lifetime = LifetimeDistribution::fixed(cfg.ensemble.params.tau_t);
  else if (cfg.ensemble.lifetime.kind == LifetimeDistribution::Kind::Fixed &&
           !state.lifetime_tau_set)
    cfg.ensemble.lifetime.fixed_tau = cfg.ensemble.params.tau_t;

  if (issues.empty()) {
    try {
      cfg.ensemble.validate();
    } catch (const std::exception& e) {
      issues.push_back({0, e.what()});
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{0, "cannot open config file '" + path + "'"}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  const auto& e = config.ensemble;
  os << "# resolved qjsim configuration\n";
  if (!config.preset_name.empty()) os << "preset = " << config.preset_name << "\n";
  os << "\n[photophysics]\n";
  os << "k_exc = " << format_g17(e.params.k_exc) << "/s\n";
  os << "k_fl = " << format_g17(e.params.k_fl) << "/s\n";
  os << "k_isc = " << format_g17(e.params.k_isc) << "/s\n";
  os << "tau_t = " << format_g17(e.params.tau_t) << "s\n";
  os << "eta = " << format_g17(e.params.eta) << "\n";
  os << "k_bleach = " << format_g17(e.params.k_bleach) << "/s\n";
  os << "dark_rate = " << format_g17(e.params.dark_rate) << "/s\n";
  os << "\n[feedback]\n";
  os << "enabled = " << (e.feedback.enabled ? "true" : "false") << "\n";
  os << "tau_d = " << format_g17(e.feedback.tau_d) << "s\n";
  os << "tau_off = " << format_g17(e.feedback.tau_off) << "s\n";
  os << "latency = " << format_g17(e.feedback.latency) << "s\n";
  os << "\n[ensemble]\n";
  os << "n_molecules = " << e.n_molecules << "\n";
  os << "horizon = " << format_g17(e.horizon) << "s\n";
  os << "seed = " << e.master_seed << "\n";
  os << "min_rate = " << format_g17(e.min_detected_rate) << "/s\n";
  os << "path = " << (e.aggregated ? "aggregated" : "exact") << "\n";
  switch (e.lifetime.kind) {
    case LifetimeDistribution::Kind::Fixed:
      os << "lifetime = fixed\n";
      os << "lifetime_tau = " << format_g17(e.lifetime.fixed_tau) << "s\n";
      break;
    case LifetimeDistribution::Kind::LogNormal:
      os << "lifetime = lognormal\n";
      os << "lifetime_median = " << format_g17(e.lifetime.median_tau) << "s\n";
      os << "lifetime_sigma_log = " << format_g17(e.lifetime.sigma_log) << "\n";
      break;
    case LifetimeDistribution::Kind::Empirical: {
      os << "lifetime = empirical\n";
      os << "lifetime_values = ";
      for (std::size_t i = 0; i < e.lifetime.values.size(); ++i) {
        if (i) os << ",";
        os << format_g17(e.lifetime.values[i]) << "s";
      }
      os << "\n";
      break;
    }
  }
  os << "\n[output]\n";
  os << "dir = " << config.out_dir << "\n";
  return os.str();
}

std::vector<std::string> RunConfig::warnings() const {
  std::vector<std::string> w = ensemble.params.warnings();
  PhotophysicsParams central = ensemble.params;
  central.tau_t = ensemble.lifetime.central_value();
  const double rate = detected_photon_rate(central);
  if (rate > 0.0 && ensemble.feedback.tau_d <= 1.0 / rate)
    w.push_back(
        "feedback tau_d does not exceed the mean detection interval (" +
        format_g17(1.0 / rate) +
        " s); the gate would switch permanently");
  if (ensemble.feedback.tau_off <= central.tau_t)
    w.push_back("feedback tau_off does not exceed the triplet lifetime anchor; "
                "molecules often stay shelved across blanking");
  return w;
}

}  // namespace qjf
