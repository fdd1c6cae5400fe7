#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "iuq/ci.hpp"
#include "iuq/design.hpp"
#include "iuq/estimators.hpp"
#include "iuq/input_models.hpp"
#include "iuq/simulators.hpp"

namespace iuq {

enum class EstimatorKind { StdOpt, StdEven, Knn, Klr };

EstimatorKind parse_estimator_kind(std::string_view name);
std::string_view estimator_name(EstimatorKind kind);
inline bool is_standard(EstimatorKind kind) { return kind == EstimatorKind::StdOpt || kind == EstimatorKind::StdEven; }

struct ExperimentConfig {
  ModelId model = ModelId::Queue;
  std::size_t m = 50;
  double alpha = 0.05;
  EstimatorKind estimator = EstimatorKind::Klr;
  SamplingMode sampling = SamplingMode::Ellipsoid;
  CiMethod ci = CiMethod::Percentile;
  std::size_t r = 0;    // 0: the model's default
  bool auto_r = false;  // choose r with the pilot before the macro runs
  std::size_t macros = 200;
  std::uint64_t seed = 1;
  std::string out;
  std::string san_topology;
  int threads = 0;  // 0: OpenMP default
  double eta_reference = std::numeric_limits<double>::quiet_NaN();  // NaN: the model's pinned value

  PilotOptions pilot;
  std::size_t pilot_repeats = 1000;
  std::size_t pilot_m = 50;
  CvOptions cv;
};

/// Applies flat key=value settings (keys as in the CLI flags, plus pilot.*,
/// cv.*, ci and eta_reference). Unknown keys and malformed values throw ConfigError.
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings);

/// Reads `key = value` lines; blank lines and `#` comments are ignored.
std::map<std::string, std::string> read_settings(std::istream& in);
std::map<std::string, std::string> read_settings_file(const std::string& path);

/// Settings that reproduce `cfg` through apply_settings.
std::map<std::string, std::string> config_settings(const ExperimentConfig& cfg);

struct StdBudget {
  std::size_t n_tilde = 1;
  std::size_t r = 1;
};

/// Splits n*r runs across bootstrap parameters. Even: r_s = round(sqrt(nr));
/// Opt: r_s = round(cbrt(nr)). Then n_tilde_s = round(nr / r_s), both >= 1.
StdBudget std_budget_split(EstimatorKind kind, std::size_t n, std::size_t r);

/// Everything one macro run produces.
struct IuqOutcome {
  CIResult ci;
  std::size_t n = 0;        // simulation parameters (n_tilde_s for std)
  std::size_t n_tilde = 0;  // bootstrap parameters
  std::size_t r = 0;        // runs per simulation parameter
  std::size_t k_y = 0;
  std::size_t k_a = 0;
  std::size_t sims_used = 0;
  std::size_t fallbacks = 0;
  std::size_t eligible = 0;
  LrDiagnostics lr;
  ParamVector theta_hat;
};

/// Inputs of one pipeline evaluation that do not come from the config.
struct IuqContext {
  const Testbed* testbed = nullptr;
  std::size_t r = 1;
  std::uint64_t macro = 0;
};

/// kNN/kLR pipeline on one input dataset.
IuqOutcome run_iuq_knn_klr(const ExperimentConfig& cfg, const IuqContext& ctx, const Dataset& data);
/// Standard pipeline on one input dataset.
IuqOutcome run_iuq_std(const ExperimentConfig& cfg, const IuqContext& ctx, const Dataset& data);

struct MacroRecord {
  std::uint64_t macro_id = 0;
  std::string estimator;
  std::string sampling;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t n_tilde = 0;
  std::size_t r = 0;
  std::size_t k_y = 0;
  std::size_t k_a = 0;
  double lower = 0.0;
  double upper = 0.0;
  double width = 0.0;
  bool covered = false;
  std::size_t sims_used = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const MacroRecord&, const MacroRecord&) = default;
};

struct MacroFailure {
  std::uint64_t macro_id = 0;
  std::string message;
};

struct ExperimentSummary {
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_width = 0.0;
  double width_se = 0.0;
  std::size_t macros = 0;  // requested
  std::size_t failed = 0;
  std::size_t fallbacks = 0;
  LrDiagnostics lr;
  double eta_reference = 0.0;
  double eta_reference_se = 0.0;
  std::size_t r = 0;
  double pilot_r_mean = std::numeric_limits<double>::quiet_NaN();  // when auto_r
  std::vector<MacroFailure> failures;
};

struct ExperimentResult {
  std::vector<MacroRecord> records;  // successful macro runs, by macro id
  ExperimentSummary summary;
};

/// Summary statistics over successful records.
ExperimentSummary summarize_records(const std::vector<MacroRecord>& records, std::size_t requested);

struct PilotSummary {
  double mean_r = 0.0;
  std::size_t chosen_r = 0;  // mean rounded to the nearest integer, at least 1
  std::vector<PilotResult> runs;
  std::size_t failed = 0;
};

/// Repeats the r-selection pilot `cfg.pilot_repeats` times, each on a fresh
/// size-pilot_m dataset at the true parameter.
PilotSummary run_pilot(const ExperimentConfig& cfg, const Testbed& testbed);

/// Macro experiment: a fresh dataset per macro run, the configured pipeline,
/// and coverage against the reference eta. Throws EstimationError when more
/// than 10% of macro runs fail.
ExperimentResult run_macro_experiment(const ExperimentConfig& cfg);

// Reporting -----------------------------------------------------------------

void write_macros_csv(const std::vector<MacroRecord>& records, std::ostream& out);
std::vector<MacroRecord> read_macros_csv(std::istream& in);
nlohmann::json summary_json(const ExperimentSummary& summary, const ExperimentConfig& cfg);
/// Writes DIR/macros.csv and DIR/summary.json, creating DIR when needed.
void emit_report(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& dir);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace iuq
