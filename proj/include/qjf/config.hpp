#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qjf/ensemble.hpp"

namespace qjf {

struct ConfigIssue {
  int line;  ///< 1-based; 0 when not tied to a specific line
  std::string message;
};

/// Carries every violation found in a configuration document, not just the
/// first one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// A fully resolved run description: emitter rates, feedback protocol,
/// ensemble scalars, output directory.
struct RunConfig {
  std::string preset_name;  ///< "dii", "terrylene", or "" when explicit
  EnsembleConfig ensemble;
  std::string out_dir = "out";

  /// Soft advisories from cross-field checks (tau_d vs detection interval,
  /// tau_off vs triplet lifetime, k_fl vs 1/tau_t).
  std::vector<std::string> warnings() const;

  bool operator==(const RunConfig&) const = default;
};

/// Built-in parameterizations. "dii" carries the saturated-excitation rates,
/// the 70 us / 400 us / 600 ns feedback constants and a lognormal lifetime
/// population with median 240 us; "terrylene" is the same structure with the
/// lifetime anchor at 217 us.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Parses a sectioned key = value document ([photophysics], [feedback],
/// [ensemble], [output]; a top-level `preset = name` line loads defaults
/// first). Durations take ns/us/ms/s suffixes, rates /s or k/s. Unknown
/// keys and sections are errors; all violations are reported together with
/// their line numbers.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Canonical form; parse_config(serialize_config(c)) == c bit-exactly.
std::string serialize_config(const RunConfig& config);

/// Unit-suffixed scalar parsing (shared with CLI flags).
double parse_duration(const std::string& text);  // e.g. "70us" -> 7e-05
double parse_rate(const std::string& text);      // e.g. "30k/s" -> 3e4

}  // namespace qjf
