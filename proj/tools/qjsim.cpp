// qjsim: single-molecule photostability simulator with a quantum-jump
// feedback gate. Subcommands produce plot-ready CSV/JSON artifacts:
//
//   simulate  one molecule -> event log (JSON lines) + binned trace
//   sweep     paired ensembles over tau_d -> gain table + per-arm trials
//   replay    recorded photon stream -> gate command schedule
//   analyze   two trial CSVs -> survival curves + gain/KS JSON
//   trace     re-bin an event log
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qjf/config.hpp"
#include "qjf/ensemble.hpp"
#include "qjf/io.hpp"
#include "qjf/photophysics.hpp"
#include "qjf/stats.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned jobs = 1;
  bool force_exact = false;
  bool force_aggregated = false;
};

void add_config_opts(CLI::App* cmd, CommonOpts& o, bool with_path_flags) {
  cmd->add_option("--config", o.config_path, "configuration file");
  cmd->add_option("--preset", o.preset, "built-in preset (dii, terrylene)");
  cmd->add_option("--out", o.out_dir, "output directory (overrides [output] dir)");
  cmd->add_option("--seed", o.seed, "master seed (overrides [ensemble] seed)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  if (with_path_flags) {
    cmd->add_option("--jobs", o.jobs, "worker threads (1 default, 0 = all cores)");
    auto* exact = cmd->add_flag("--exact", o.force_exact, "event-by-event trajectory path");
    cmd->add_flag("--aggregated", o.force_aggregated, "quasi-steady-state fast path")
        ->excludes(exact);
  }
}

qjf::RunConfig resolve_config(const CommonOpts& o) {
  if (o.config_path.empty() && o.preset.empty())
    throw qjf::ConfigError({{0, "either --config or --preset is required"}});
  qjf::RunConfig cfg;
  if (!o.config_path.empty())
    cfg = qjf::load_config_file(o.config_path);
  else
    cfg = qjf::preset_config(o.preset);
  if (o.seed_set) cfg.ensemble.master_seed = o.seed;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.force_exact) cfg.ensemble.aggregated = false;
  if (o.force_aggregated) cfg.ensemble.aggregated = true;
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
  return cfg;
}

void emit(const fs::path& path, const std::string& content) {
  qjf::write_file_atomic(path.string(), content);
  std::cout << "wrote " << path.string() << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string json_escape_path(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

int run_simulate(const CommonOpts& opts, double bin_width) {
  qjf::RunConfig cfg = resolve_config(opts);
  const auto& e = cfg.ensemble;
  qjf::RngEngine rng(qjf::derive_seed(
      e.master_seed, 0,
      e.feedback.enabled ? qjf::kStreamArmWith : qjf::kStreamArmWithout));
  const qjf::Trajectory tr =
      e.aggregated
          ? qjf::simulate_trajectory_aggregated(e.params, e.feedback, rng, e.horizon)
          : qjf::simulate_trajectory_exact(e.params, e.feedback, rng, e.horizon);

  const std::string header = qjf::artifact_header(cfg);
  // The event-log format is pure records, so the seed and resolved config
  // ride in a sibling metadata file instead of a header line.
  std::ostringstream meta;
  meta << "{\n  \"master_seed\": " << e.master_seed << ",\n  \"config\": [\n";
  {
    std::istringstream cfg_lines(qjf::serialize_config(cfg));
    std::string line;
    bool first = true;
    while (std::getline(cfg_lines, line)) {
      if (!first) meta << ",\n";
      meta << "    \"" << json_escape_path(line) << "\"";
      first = false;
    }
  }
  meta << "\n  ]\n}\n";
  emit(fs::path(cfg.out_dir) / "run_meta.json", meta.str());
  emit(fs::path(cfg.out_dir) / "events.jsonl",
       qjf::events_to_jsonl(qjf::trajectory_events(tr)));
  emit(fs::path(cfg.out_dir) / "trace.csv",
       qjf::binned_trace_to_csv(header,
                                qjf::bin_trace(tr.photon_times, bin_width, tr.end_time)));
  std::cout << "molecule: " << tr.photon_times.size() << " photons, "
            << tr.triplet_visits << " triplet visits, "
            << (tr.bleach_time ? "bleached at " + qjf::format_time(*tr.bleach_time) + " s"
                               : "survived to the horizon")
            << "\n";
  return 0;
}

int run_sweep(const CommonOpts& opts, const std::vector<std::string>& tau_d_args,
              const std::string& arms_arg, std::size_t n_boot) {
  qjf::RunConfig cfg = resolve_config(opts);
  std::vector<double> tau_d_values;
  for (const auto& item : tau_d_args) tau_d_values.push_back(qjf::parse_duration(item));
  if (tau_d_values.empty())
    throw qjf::ConfigError({{0, "--tau-d requires at least one duration"}});

  bool emit_with = true, emit_without = true;
  if (!arms_arg.empty()) {
    emit_with = arms_arg.find("with") != std::string::npos;
    emit_without = arms_arg.find("without") != std::string::npos;
    // "with" is a substring of "without"; disambiguate.
    if (arms_arg.find("without") != std::string::npos) {
      std::string rest = arms_arg;
      for (auto pos = rest.find("without"); pos != std::string::npos;
           pos = rest.find("without"))
        rest.erase(pos, 7);
      emit_with = rest.find("with") != std::string::npos;
    }
    if (!emit_with && !emit_without)
      throw qjf::ConfigError({{0, "--arms must name 'with' and/or 'without'"}});
  }

  const std::string header = qjf::artifact_header(cfg);
  const qjf::GainTable table = qjf::sweep_tau_d(
      cfg.ensemble, tau_d_values, n_boot, opts.jobs,
      [&](std::size_t row, bool with_arm, const qjf::EnsembleResult& result) {
        if ((with_arm && !emit_with) || (!with_arm && !emit_without)) return;
        const std::string arm = with_arm ? "with" : "without";
        char name[64];
        std::snprintf(name, sizeof(name), "trials_tau_d_%g_%s.csv", tau_d_values[row],
                      arm.c_str());
        emit(fs::path(cfg.out_dir) / name, qjf::trials_to_csv(header, result.trials, arm));
      });
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
  emit(fs::path(cfg.out_dir) / "gain_table.csv", qjf::gain_table_to_csv(header, table));
  for (const auto& r : table.rows)
    std::cout << "tau_d " << qjf::format_time(r.tau_d) << " s: G = "
              << qjf::format_probability(r.g_measured) << " (predicted "
              << qjf::format_probability(r.g_predicted) << ", CI ["
              << qjf::format_probability(r.ci_low) << ", "
              << qjf::format_probability(r.ci_high) << "])\n";
  return 0;
}

int run_replay(const CommonOpts& opts, const std::string& photons_path,
               const std::string& horizon_arg) {
  qjf::RunConfig cfg = resolve_config(opts);
  const std::vector<double> photons = qjf::photon_times_from_text(read_file(photons_path));
  const double horizon = qjf::parse_duration(horizon_arg);
  const auto schedule = qjf::replay(cfg.ensemble.feedback, photons, horizon);
  emit(fs::path(cfg.out_dir) / "gate_commands.csv",
       qjf::gate_commands_to_csv(qjf::artifact_header(cfg), schedule));
  std::cout << schedule.size() << " gate command(s) from " << photons.size()
            << " photon(s)\n";
  return 0;
}

int run_analyze(const std::string& with_path, const std::string& without_path,
                const std::string& out_dir, std::size_t n_boot, std::uint64_t seed) {
  const auto with_all = qjf::trials_from_csv(read_file(with_path));
  const auto without_all = qjf::trials_from_csv(read_file(without_path));

  auto split_censored = [](const std::vector<qjf::TrialResult>& trials,
                           std::vector<double>& n_photons, std::vector<double>& times) {
    std::size_t censored = 0;
    for (const auto& t : trials) {
      if (!t.bleached) {
        ++censored;
        continue;
      }
      n_photons.push_back(static_cast<double>(t.n_photons));
      times.push_back(t.survival_time);
    }
    return censored;
  };
  std::vector<double> with_n, with_t, without_n, without_t;
  const std::size_t cens_with = split_censored(with_all, with_n, with_t);
  const std::size_t cens_without = split_censored(without_all, without_n, without_t);
  if (cens_with + cens_without > 0)
    std::cerr << "warning: excluding " << cens_with << " censored with-arm and "
              << cens_without << " censored without-arm molecule(s)\n";

  const qjf::GainEstimate gain = qjf::gain_estimate(with_n, without_n, n_boot, seed);
  const qjf::KsResult ks = qjf::ks_two_sample(with_n, without_n);

  std::ostringstream meta;
  meta << "# with = " << with_path << "\n# without = " << without_path
       << "\n# n_boot = " << n_boot << "\n# seed = " << seed << "\n";
  emit(fs::path(out_dir) / "survival_n_with.csv",
       qjf::survival_to_csv(meta.str(), qjf::survival_curve(with_n)));
  emit(fs::path(out_dir) / "survival_n_without.csv",
       qjf::survival_to_csv(meta.str(), qjf::survival_curve(without_n)));
  emit(fs::path(out_dir) / "survival_t_with.csv",
       qjf::survival_to_csv(meta.str(), qjf::survival_curve(with_t)));
  emit(fs::path(out_dir) / "survival_t_without.csv",
       qjf::survival_to_csv(meta.str(), qjf::survival_curve(without_t)));

  std::ostringstream json;
  json << "{\n"
       << "  \"g\": " << qjf::format_time(gain.g) << ",\n"
       << "  \"ci_low\": " << qjf::format_time(gain.ci_low) << ",\n"
       << "  \"ci_high\": " << qjf::format_time(gain.ci_high) << ",\n"
       << "  \"d\": " << qjf::format_probability(ks.d) << ",\n"
       << "  \"p\": " << qjf::format_probability(ks.p) << ",\n"
       << "  \"meta\": {\n"
       << "    \"with\": \"" << json_escape_path(with_path) << "\",\n"
       << "    \"without\": \"" << json_escape_path(without_path) << "\",\n"
       << "    \"n_with\": " << gain.n_with << ",\n"
       << "    \"n_without\": " << gain.n_without << ",\n"
       << "    \"n_boot\": " << n_boot << ",\n"
       << "    \"seed\": " << seed << "\n"
       << "  }\n"
       << "}\n";
  emit(fs::path(out_dir) / "gain_ks.json", json.str());
  std::cout << "G = " << qjf::format_probability(gain.g) << " ["
            << qjf::format_probability(gain.ci_low) << ", "
            << qjf::format_probability(gain.ci_high)
            << "], KS d = " << qjf::format_probability(ks.d)
            << ", p = " << qjf::format_probability(ks.p) << "\n";
  return 0;
}

int run_trace(const std::string& events_path, const std::string& bin_width_arg,
              const std::string& out_dir) {
  const auto events = qjf::events_from_jsonl(read_file(events_path));
  const double bin_width = qjf::parse_duration(bin_width_arg);
  std::vector<double> photons;
  double end = 0.0;
  for (const auto& ev : events) {
    end = std::max(end, ev.t);
    if (ev.kind == qjf::EventKind::Photon) photons.push_back(ev.t);
  }
  std::ostringstream meta;
  meta << "# source = " << events_path << "\n# bin_width = " << qjf::format_time(bin_width)
       << "\n";
  emit(fs::path(out_dir) / "trace.csv",
       qjf::binned_trace_to_csv(meta.str(), qjf::bin_trace(photons, bin_width, end)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-molecule photostability simulator with quantum-jump feedback"};
  app.require_subcommand(0, 1);

  std::string show_preset;
  app.add_option("--show-preset", show_preset, "print a built-in preset and exit");

  CommonOpts sim_opts;
  std::string bin_width_arg = "1ms";
  auto* sim = app.add_subcommand("simulate", "simulate one molecule");
  add_config_opts(sim, sim_opts, true);
  sim->add_option("--bin-width", bin_width_arg, "trace bin width, e.g. 1ms");

  CommonOpts sweep_opts;
  std::vector<std::string> tau_d_args;
  std::string arms_arg;
  std::size_t sweep_boot = 2000;
  auto* sweep = app.add_subcommand("sweep", "paired gain sweep over tau_d");
  add_config_opts(sweep, sweep_opts, true);
  sweep->add_option("--tau-d", tau_d_args, "comma-separated decision windows, e.g. 40us,70us")
      ->required()
      ->delimiter(',');
  sweep->add_option("--arms", arms_arg, "which per-arm trial CSVs to write (with,without)");
  sweep->add_option("--n-boot", sweep_boot, "bootstrap resamples for the gain CI");

  CommonOpts replay_opts;
  std::string photons_path, horizon_arg;
  auto* rep = app.add_subcommand("replay", "feed a photon stream through the controller");
  add_config_opts(rep, replay_opts, false);
  rep->add_option("--photons", photons_path, "file with one timestamp (seconds) per line")
      ->required();
  rep->add_option("--horizon", horizon_arg, "replay horizon, e.g. 600us")->required();

  std::string with_path, without_path, analyze_out = "out";
  std::size_t analyze_boot = 2000;
  std::uint64_t analyze_seed = 42;
  auto* ana = app.add_subcommand("analyze", "survival curves, gain and KS test");
  ana->add_option("--with", with_path, "with-feedback trial CSV")->required();
  ana->add_option("--without", without_path, "without-feedback trial CSV")->required();
  ana->add_option("--out", analyze_out, "output directory");
  ana->add_option("--n-boot", analyze_boot, "bootstrap resamples");
  ana->add_option("--seed", analyze_seed, "bootstrap seed");

  std::string events_path, trace_bin = "1ms", trace_out = "out";
  auto* trc = app.add_subcommand("trace", "re-bin an event log");
  trc->add_option("--events", events_path, "events.jsonl produced by simulate")->required();
  trc->add_option("--bin-width", trace_bin, "bin width, e.g. 1ms");
  trc->add_option("--out", trace_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (!show_preset.empty()) {
      std::cout << qjf::serialize_config(qjf::preset_config(show_preset));
      return 0;
    }
    if (sim->parsed()) return run_simulate(sim_opts, qjf::parse_duration(bin_width_arg));
    if (sweep->parsed()) return run_sweep(sweep_opts, tau_d_args, arms_arg, sweep_boot);
    if (rep->parsed()) return run_replay(replay_opts, photons_path, horizon_arg);
    if (ana->parsed())
      return run_analyze(with_path, without_path, analyze_out, analyze_boot, analyze_seed);
    if (trc->parsed()) return run_trace(events_path, trace_bin, trace_out);
    std::cout << app.help();
    return 0;
  } catch (const qjf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
