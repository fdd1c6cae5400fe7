#include "iuq/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "iuq/errors.hpp"
#include "iuq/parallel.hpp"

namespace iuq {

namespace {

// Flags that feed settings keys. Values are kept as text and validated by
// apply_settings so the config file and the command line share one parser.
class SettingFlags {
 public:
  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(flag, [this, key](const std::string& v) { values_[key] = v; }, help);
  }
  void add_config(CLI::App& app) { app.add_option("--config", config_path_, "key=value settings file"); }

  ExperimentConfig resolve() const {
    std::map<std::string, std::string> settings;
    if (!config_path_.empty()) settings = read_settings_file(config_path_);
    for (const auto& [k, v] : values_) settings[k] = v;
    ExperimentConfig cfg;
    apply_settings(cfg, settings);
    return cfg;
  }

 private:
  std::map<std::string, std::string> values_;
  std::string config_path_;
};

void add_run_flags(CLI::App& app, SettingFlags& flags) {
  flags.add_config(app);
  flags.add(app, "--model", "model", "san, mm1 or erm");
  flags.add(app, "--m", "m", "input data size");
  flags.add(app, "--alpha", "alpha", "1 - nominal coverage");
  flags.add(app, "--estimator", "estimator", "std-opt, std-even, knn or klr");
  flags.add(app, "--sampling", "sampling", "bootstrap or ellipsoid");
  flags.add(app, "--r", "r", "runs per simulation parameter, or auto");
  flags.add(app, "--macros", "macros", "number of macro runs");
  flags.add(app, "--seed", "seed", "master seed");
  flags.add(app, "--out", "out", "output directory for macros.csv and summary.json");
  flags.add(app, "--san-topology", "san-topology", "SAN edge-list file");
  flags.add(app, "--threads", "threads", "OpenMP threads (0: default)");
  flags.add(app, "--ci", "ci", "percentile or basic");
  flags.add(app, "--eta-reference", "eta_reference", "override the reference eta");
}

int report_error(const std::exception& e, int code) {
  std::cerr << "iuq: error: " << e.what() << '\n';
  return code;
}

void print_run_summary(const ExperimentResult& result, const ExperimentConfig& cfg) {
  std::cout << summary_json(result.summary, cfg).dump(2) << '\n';
}

nlohmann::json pilot_json(const PilotSummary& p, const ExperimentConfig& cfg) {
  double mean_s = 0.0;
  for (const auto& r : p.runs) mean_s += static_cast<double>(r.final_s);
  if (!p.runs.empty()) mean_s /= static_cast<double>(p.runs.size());
  nlohmann::json j;
  j["model"] = model_name(cfg.model);
  j["repeats"] = cfg.pilot_repeats;
  j["succeeded"] = p.runs.size();
  j["failed"] = p.failed;
  j["mean_r"] = p.mean_r;
  j["chosen_r"] = p.chosen_r;
  std::vector<double> rs;
  for (const auto& r : p.runs) rs.push_back(static_cast<double>(r.r));
  if (!rs.empty()) {
    j["median_r"] = empirical_quantile(rs, 0.5);
    j["quartiles_r"] = {empirical_quantile(rs, 0.25), empirical_quantile(rs, 0.75)};
  }
  j["mean_final_s"] = mean_s;
  j["m"] = cfg.pilot_m;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

ExperimentConfig parse_run_args(const std::vector<std::string>& args) {
  CLI::App app{"iuq run"};
  SettingFlags flags;
  add_run_flags(app, flags);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
  return flags.resolve();
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Input-uncertainty quantification for ratio performance measures"};
  app.require_subcommand(1);

  SettingFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "macro-run coverage experiment");
  add_run_flags(*run, run_flags);

  SettingFlags pilot_flags;
  CLI::App* pilot = app.add_subcommand("pilot", "choose r by analysis of variance");
  pilot_flags.add_config(*pilot);
  pilot_flags.add(*pilot, "--model", "model", "san, mm1 or erm");
  pilot_flags.add(*pilot, "--m", "pilot.m", "input data size of each repetition");
  pilot_flags.add(*pilot, "--repeats", "pilot.repeats", "pilot repetitions to average");
  pilot_flags.add(*pilot, "--seed", "seed", "master seed");
  pilot_flags.add(*pilot, "--san-topology", "san-topology", "SAN edge-list file");
  pilot_flags.add(*pilot, "--threads", "threads", "OpenMP threads (0: default)");

  SettingFlags oracle_flags;
  std::size_t budget = 10000000;
  CLI::App* oracle = app.add_subcommand("oracle", "brute-force eta at the true parameter");
  oracle_flags.add(*oracle, "--model", "model", "san, mm1 or erm");
  oracle_flags.add(*oracle, "--seed", "seed", "master seed");
  oracle_flags.add(*oracle, "--san-topology", "san-topology", "SAN edge-list file");
  oracle_flags.add(*oracle, "--threads", "threads", "OpenMP threads (0: default)");
  oracle->add_option("--budget", budget, "number of runs")->check(CLI::Range(std::size_t{10000}, std::size_t{1} << 40));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      const ExperimentConfig cfg = run_flags.resolve();
      const ExperimentResult result = run_macro_experiment(cfg);
      if (!cfg.out.empty()) emit_report(result, cfg, cfg.out);
      print_run_summary(result, cfg);
    } else if (*pilot) {
      const ExperimentConfig cfg = pilot_flags.resolve();
      set_thread_count(cfg.threads);
      const Testbed tb = make_testbed(cfg.model, cfg.san_topology);
      std::cout << pilot_json(run_pilot(cfg, tb), cfg).dump(2) << '\n';
    } else if (*oracle) {
      const ExperimentConfig cfg = oracle_flags.resolve();
      set_thread_count(cfg.threads);
      const Testbed tb = make_testbed(cfg.model, cfg.san_topology);
      const OracleResult o = true_eta_oracle(*tb.simulator, tb.true_param, budget, cfg.seed);
      nlohmann::json j;
      j["model"] = model_name(cfg.model);
      j["eta"] = o.eta;
      j["se"] = o.se;
      j["runs"] = o.runs;
      j["mean_y"] = o.mean_y;
      j["mean_a"] = o.mean_a;
      j["seed"] = cfg.seed;
      std::cout << j.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    return report_error(e, 2);
  } catch (const std::exception& e) {
    return report_error(e, 1);
  }
  return 0;
}

}  // namespace iuq
