#include "iuq/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "iuq/errors.hpp"
#include "iuq/neighbors.hpp"
#include "iuq/parallel.hpp"

namespace iuq {

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "std-opt") return EstimatorKind::StdOpt;
  if (name == "std-even") return EstimatorKind::StdEven;
  if (name == "knn") return EstimatorKind::Knn;
  if (name == "klr") return EstimatorKind::Klr;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (expected std-opt, std-even, knn or klr)");
}

std::string_view estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::StdOpt: return "std-opt";
    case EstimatorKind::StdEven: return "std-even";
    case EstimatorKind::Knn: return "knn";
    case EstimatorKind::Klr: return "klr";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Settings

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("setting '" + key + "' has malformed value '" + text + "'");
  }
  return value;
}

std::vector<std::size_t> parse_grid(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<std::size_t>(key, item));
  }
  return out;
}

}  // namespace

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) {
    if (key == "model") cfg.model = parse_model_id(value);
    else if (key == "m") cfg.m = parse_number<std::size_t>(key, value);
    else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
    else if (key == "estimator") cfg.estimator = parse_estimator_kind(value);
    else if (key == "sampling") cfg.sampling = parse_sampling_mode(value);
    else if (key == "ci") cfg.ci = parse_ci_method(value);
    else if (key == "r") {
      cfg.auto_r = value == "auto";
      cfg.r = cfg.auto_r ? 0 : parse_number<std::size_t>(key, value);
    } else if (key == "macros") cfg.macros = parse_number<std::size_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "san-topology") cfg.san_topology = value;
    else if (key == "threads") cfg.threads = parse_number<int>(key, value);
    else if (key == "eta_reference") cfg.eta_reference = parse_number<double>(key, value);
    else if (key == "pilot.b") cfg.pilot.b = parse_number<std::size_t>(key, value);
    else if (key == "pilot.s0") cfg.pilot.s0 = parse_number<std::size_t>(key, value);
    else if (key == "pilot.ds") cfg.pilot.ds = parse_number<std::size_t>(key, value);
    else if (key == "pilot.max_s") cfg.pilot.max_s = parse_number<std::size_t>(key, value);
    else if (key == "pilot.c_zeta") cfg.pilot.c_zeta = parse_number<double>(key, value);
    else if (key == "pilot.max_r") cfg.pilot.max_r = parse_number<std::size_t>(key, value);
    else if (key == "pilot.repeats") cfg.pilot_repeats = parse_number<std::size_t>(key, value);
    else if (key == "pilot.m") cfg.pilot_m = parse_number<std::size_t>(key, value);
    else if (key == "cv.folds") cfg.cv.folds = parse_number<std::size_t>(key, value);
    else if (key == "cv.grid") cfg.cv.candidates = parse_grid(key, value);
    else throw ConfigError("unknown setting '" + key + "'");
  }
  if (cfg.m < 2) throw ConfigError("m must be at least 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (cfg.macros < 1) throw ConfigError("macros must be at least 1");
  if (cfg.cv.folds < 2) throw ConfigError("cv.folds must be at least 2");
}

std::map<std::string, std::string> read_settings(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + " is not key=value: '" + body + "'");
    }
    out[trim(std::string_view(body).substr(0, eq))] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  return read_settings(in);
}

std::map<std::string, std::string> config_settings(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  out["model"] = model_name(cfg.model);
  out["m"] = std::to_string(cfg.m);
  out["alpha"] = format_double(cfg.alpha);
  out["estimator"] = estimator_name(cfg.estimator);
  out["sampling"] = sampling_name(cfg.sampling);
  out["ci"] = ci_method_name(cfg.ci);
  out["r"] = cfg.auto_r ? "auto" : std::to_string(cfg.r);
  out["macros"] = std::to_string(cfg.macros);
  out["seed"] = std::to_string(cfg.seed);
  out["out"] = cfg.out;
  out["san-topology"] = cfg.san_topology;
  if (!std::isnan(cfg.eta_reference)) out["eta_reference"] = format_double(cfg.eta_reference);
  out["pilot.b"] = std::to_string(cfg.pilot.b);
  out["pilot.s0"] = std::to_string(cfg.pilot.s0);
  out["pilot.ds"] = std::to_string(cfg.pilot.ds);
  out["pilot.max_s"] = std::to_string(cfg.pilot.max_s);
  out["pilot.c_zeta"] = format_double(cfg.pilot.c_zeta);
  out["pilot.max_r"] = std::to_string(cfg.pilot.max_r);
  out["pilot.repeats"] = std::to_string(cfg.pilot_repeats);
  out["pilot.m"] = std::to_string(cfg.pilot_m);
  out["cv.folds"] = std::to_string(cfg.cv.folds);
  std::string grid;
  for (std::size_t k : cfg.cv.candidates) grid += (grid.empty() ? "" : ",") + std::to_string(k);
  out["cv.grid"] = grid;
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

StdBudget std_budget_split(EstimatorKind kind, std::size_t n, std::size_t r) {
  if (!is_standard(kind)) throw ConfigError("budget split applies to the standard estimator only");
  const double total = static_cast<double>(n) * static_cast<double>(r);
  const double runs = kind == EstimatorKind::StdEven ? std::sqrt(total) : std::cbrt(total);
  StdBudget out;
  out.r = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(runs)));
  out.n_tilde = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(total / static_cast<double>(out.r))));
  return out;
}

namespace {

struct KChoice {
  std::size_t k_y = 1;
  std::size_t k_a = 1;
};

// Cross-validated k for Y and A over the eligible simulation parameters. With
// fewer eligible parameters than folds, leave-one-out is used.
KChoice select_ks(const RunTable& table, EstimatorKind kind, const CvOptions& options) {
  std::vector<std::size_t> pick;
  for (std::size_t j = 0; j < table.size(); ++j)
    if (table.eligible()[j]) pick.push_back(j);
  if (pick.empty()) throw EstimationError("no simulation parameter has a nonzero mean A");
  if (pick.size() == 1) return {};

  std::vector<ParamVector> params;
  std::vector<double> ys;
  std::vector<double> as;
  for (std::size_t j : pick) {
    params.push_back(table.param(j));
    ys.push_back(table.mean_y(j));
    as.push_back(table.mean_a(j));
  }
  CvOptions opts = options;
  opts.folds = std::min(opts.folds, pick.size());

  KChoice out;
  if (kind == EstimatorKind::Knn) {
    out.k_y = cv_select_k(params, ys, opts).k;
    out.k_a = cv_select_k(params, as, opts).k;
  } else {
    out.k_y = cv_select_k(params, ys, [&](std::size_t j, std::size_t i) {
      return table.lr_means(pick[j], params[i]).first;
    }, opts).k;
    out.k_a = cv_select_k(params, as, [&](std::size_t j, std::size_t i) {
      return table.lr_means(pick[j], params[i]).second;
    }, opts).k;
  }
  return out;
}

CIResult make_ci(const ExperimentConfig& cfg, std::span<const double> estimates, double center) {
  CIResult ci = cfg.ci == CiMethod::Basic ? basic_ci(estimates, center, cfg.alpha) : percentile_ci(estimates, cfg.alpha);
  ci.estimator = estimator_name(cfg.estimator);
  return ci;
}

const Testbed& require_testbed(const IuqContext& ctx) {
  if (!ctx.testbed) throw ConfigError("pipeline needs a testbed");
  if (ctx.r < 1) throw ConfigError("r must be at least 1");
  return *ctx.testbed;
}

}  // namespace

IuqOutcome run_iuq_knn_klr(const ExperimentConfig& cfg, const IuqContext& ctx, const Dataset& data) {
  if (is_standard(cfg.estimator)) throw ConfigError("run_iuq_knn_klr needs the knn or klr estimator");
  const Testbed& tb = require_testbed(ctx);
  const InputModel& model = tb.data_model;
  const std::size_t m = data.size();

  IuqOutcome out;
  out.theta_hat = model.mle(data);
  const SampleSizes sizes = sample_size_rule(m);
  const BootstrapSet boots =
      bootstrap_params(model, out.theta_hat, m, sizes.n_tilde, {cfg.seed, ctx.macro, Phase::Bootstrap});
  SimParamSet sim_params = sample_sim_params(cfg.sampling, boots, model, out.theta_hat, m, sizes.n,
                                             {cfg.seed, ctx.macro, Phase::SimParams});
  const RunTable table(*tb.simulator, std::move(sim_params.params), ctx.r, {cfg.seed, ctx.macro, Phase::Simulation});
  const NeighborIndex index(table.params());
  const KChoice ks = select_ks(table, cfg.estimator, cfg.cv);

  const bool lr = cfg.estimator == EstimatorKind::Klr;
  auto estimate = [&](const ParamVector& theta) {
    return lr ? klr_ratio(table, index, theta, ks.k_y, ks.k_a) : knn_ratio(table, index, theta, ks.k_y, ks.k_a);
  };
  std::vector<double> values(boots.params.size());
  std::vector<LrDiagnostics> diags(boots.params.size());
  parallel_for(boots.params.size(), [&](std::size_t i) {
    const RatioEstimate e = estimate(boots.params[i]);
    values[i] = e.value;
    diags[i] = e.lr;
  });
  for (const auto& d : diags) out.lr += d;

  const double center = cfg.ci == CiMethod::Basic ? estimate(out.theta_hat).value : 0.0;
  out.ci = make_ci(cfg, values, center);
  out.n = table.size();
  out.n_tilde = boots.params.size();
  out.r = ctx.r;
  out.k_y = ks.k_y;
  out.k_a = ks.k_a;
  out.sims_used = table.total_runs();
  out.eligible = table.eligible_count();
  return out;
}

IuqOutcome run_iuq_std(const ExperimentConfig& cfg, const IuqContext& ctx, const Dataset& data) {
  if (!is_standard(cfg.estimator)) throw ConfigError("run_iuq_std needs a standard estimator");
  const Testbed& tb = require_testbed(ctx);
  const InputModel& model = tb.data_model;
  const std::size_t m = data.size();

  IuqOutcome out;
  out.theta_hat = model.mle(data);
  const SampleSizes sizes = sample_size_rule(m);
  const StdBudget budget = std_budget_split(cfg.estimator, sizes.n, ctx.r);
  const BootstrapSet boots =
      bootstrap_params(model, out.theta_hat, m, budget.n_tilde, {cfg.seed, ctx.macro, Phase::StdBootstrap});
  const RunTable table(*tb.simulator, boots.params, budget.r, {cfg.seed, ctx.macro, Phase::StdSimulation});
  const NeighborIndex index(table.params());

  std::vector<double> values(table.size());
  std::vector<char> fell_back(table.size(), 0);
  std::vector<LrDiagnostics> diags(table.size());
  parallel_for(table.size(), [&](std::size_t i) {
    const RatioEstimate e = std_ratio(table, i, [&] { return klr_fallback_k1(table, index, table.param(i)); });
    values[i] = e.value;
    fell_back[i] = e.fallback ? 1 : 0;
    diags[i] = e.lr;
  });
  for (std::size_t i = 0; i < table.size(); ++i) {
    out.fallbacks += static_cast<std::size_t>(fell_back[i]);
    out.lr += diags[i];
  }

  double center = 0.0;
  if (cfg.ci == CiMethod::Basic) {
    const RunTable at_hat(*tb.simulator, {out.theta_hat}, budget.r, {cfg.seed, ctx.macro, Phase::CenterRuns});
    center = std_ratio(at_hat, 0, [&] { return klr_fallback_k1(table, index, out.theta_hat); }).value;
  }
  out.ci = make_ci(cfg, values, center);
  out.n = budget.n_tilde;
  out.n_tilde = budget.n_tilde;
  out.r = budget.r;
  out.sims_used = table.total_runs();
  out.eligible = table.eligible_count();
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentSummary summarize_records(const std::vector<MacroRecord>& records, std::size_t requested) {
  ExperimentSummary s;
  s.macros = requested;
  s.failed = requested >= records.size() ? requested - records.size() : 0;
  const double count = static_cast<double>(records.size());
  if (records.empty()) {
    s.coverage = s.coverage_se = s.mean_width = s.width_se = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double covered = 0.0;
  double width = 0.0;
  for (const auto& r : records) {
    covered += r.covered ? 1.0 : 0.0;
    width += r.width;
  }
  s.coverage = covered / count;
  s.coverage_se = std::sqrt(s.coverage * (1.0 - s.coverage) / count);
  s.mean_width = width / count;
  double ss = 0.0;
  for (const auto& r : records) ss += (r.width - s.mean_width) * (r.width - s.mean_width);
  s.width_se = records.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
  return s;
}

PilotSummary run_pilot(const ExperimentConfig& cfg, const Testbed& testbed) {
  if (cfg.pilot_repeats < 1) throw ConfigError("pilot.repeats must be at least 1");
  std::vector<std::optional<PilotResult>> results(cfg.pilot_repeats);
  parallel_for(cfg.pilot_repeats, [&](std::size_t rep) {
    const StreamSet streams{cfg.seed, rep, Phase::Pilot};
    Rng rng = streams.single();
    const Dataset data = testbed.data_model.sample_dataset(testbed.true_param, cfg.pilot_m, rng);
    try {
      const ParamVector theta_hat = testbed.data_model.mle(data);
      results[rep] = anova_select_r(*testbed.simulator, testbed.data_model, theta_hat, cfg.pilot_m, cfg.pilot, streams);
    } catch (const EstimationError&) {
    }
  });
  PilotSummary out;
  double total = 0.0;
  for (const auto& r : results) {
    if (!r) {
      ++out.failed;
      continue;
    }
    out.runs.push_back(*r);
    total += static_cast<double>(r->r);
  }
  if (out.runs.empty()) throw EstimationError("every pilot repetition failed to reach positive zeta estimates");
  out.mean_r = total / static_cast<double>(out.runs.size());
  out.chosen_r = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(out.mean_r)));
  return out;
}

ExperimentResult run_macro_experiment(const ExperimentConfig& cfg) {
  set_thread_count(cfg.threads);
  const Testbed tb = make_testbed(cfg.model, cfg.san_topology);

  ExperimentSummary meta;
  meta.eta_reference = std::isnan(cfg.eta_reference) ? tb.reference_eta : cfg.eta_reference;
  meta.eta_reference_se = std::isnan(cfg.eta_reference) ? tb.reference_eta_se : 0.0;
  if (std::isnan(meta.eta_reference)) {
    throw ConfigError("no reference eta for this model; pin one with `iuq oracle` and set eta_reference");
  }
  if (cfg.auto_r) {
    const PilotSummary pilot = run_pilot(cfg, tb);
    meta.r = pilot.chosen_r;
    meta.pilot_r_mean = pilot.mean_r;
  } else {
    meta.r = cfg.r > 0 ? cfg.r : tb.default_r;
  }

  std::vector<std::optional<MacroRecord>> slots(cfg.macros);
  std::vector<std::optional<std::string>> errors(cfg.macros);
  std::vector<std::size_t> fallbacks(cfg.macros, 0);
  std::vector<LrDiagnostics> diags(cfg.macros);
  parallel_for(cfg.macros, [&](std::size_t macro) {
    Rng rng = StreamSet{cfg.seed, macro, Phase::Data}.single();
    const Dataset data = tb.data_model.sample_dataset(tb.true_param, cfg.m, rng);
    const IuqContext ctx{&tb, meta.r, macro};
    try {
      const IuqOutcome o = is_standard(cfg.estimator) ? run_iuq_std(cfg, ctx, data) : run_iuq_knn_klr(cfg, ctx, data);
      MacroRecord rec;
      rec.macro_id = macro;
      rec.estimator = estimator_name(cfg.estimator);
      rec.sampling = is_standard(cfg.estimator) ? "bootstrap" : sampling_name(cfg.sampling);
      rec.m = cfg.m;
      rec.n = o.n;
      rec.n_tilde = o.n_tilde;
      rec.r = o.r;
      rec.k_y = o.k_y;
      rec.k_a = o.k_a;
      rec.lower = o.ci.lower;
      rec.upper = o.ci.upper;
      rec.width = o.ci.width();
      rec.covered = o.ci.contains(meta.eta_reference);
      rec.sims_used = o.sims_used;
      rec.seed = cfg.seed;
      slots[macro] = rec;
      fallbacks[macro] = o.fallbacks;
      diags[macro] = o.lr;
    } catch (const EstimationError& e) {
      errors[macro] = e.what();
    } catch (const DomainError& e) {
      errors[macro] = e.what();
    }
  });

  ExperimentResult result;
  std::vector<MacroFailure> failures;
  for (std::size_t i = 0; i < cfg.macros; ++i) {
    if (slots[i]) result.records.push_back(*slots[i]);
    if (errors[i]) failures.push_back({i, *errors[i]});
  }
  if (failures.size() * 10 > cfg.macros) {
    std::string msg = std::to_string(failures.size()) + " of " + std::to_string(cfg.macros) +
                      " macro runs failed (limit 10%); first failures:";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, failures.size()); ++i) {
      msg += "\n  macro " + std::to_string(failures[i].macro_id) + ": " + failures[i].message;
    }
    throw EstimationError(msg);
  }

  result.summary = summarize_records(result.records, cfg.macros);
  result.summary.failures = std::move(failures);
  result.summary.eta_reference = meta.eta_reference;
  result.summary.eta_reference_se = meta.eta_reference_se;
  result.summary.r = meta.r;
  result.summary.pilot_r_mean = meta.pilot_r_mean;
  for (std::size_t i = 0; i < cfg.macros; ++i) {
    result.summary.fallbacks += fallbacks[i];
    result.summary.lr += diags[i];
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

constexpr const char* kCsvHeader =
    "macro_id,estimator,sampling,m,n,n_tilde,r,k_y,k_a,lower,upper,width,covered,sims_used,seed";

}  // namespace

void write_macros_csv(const std::vector<MacroRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.macro_id << ',' << r.estimator << ',' << r.sampling << ',' << r.m << ',' << r.n << ',' << r.n_tilde
        << ',' << r.r << ',' << r.k_y << ',' << r.k_a << ',' << format_double(r.lower) << ','
        << format_double(r.upper) << ',' << format_double(r.width) << ',' << (r.covered ? 1 : 0) << ','
        << r.sims_used << ',' << r.seed << '\n';
  }
}

std::vector<MacroRecord> read_macros_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw IoError("macro CSV has an unexpected header");
  std::vector<MacroRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (f.size() != 15) throw IoError("macro CSV row has " + std::to_string(f.size()) + " fields: " + line);
    try {
      MacroRecord r;
      r.macro_id = parse_number<std::uint64_t>("macro_id", f[0]);
      r.estimator = f[1];
      r.sampling = f[2];
      r.m = parse_number<std::size_t>("m", f[3]);
      r.n = parse_number<std::size_t>("n", f[4]);
      r.n_tilde = parse_number<std::size_t>("n_tilde", f[5]);
      r.r = parse_number<std::size_t>("r", f[6]);
      r.k_y = parse_number<std::size_t>("k_y", f[7]);
      r.k_a = parse_number<std::size_t>("k_a", f[8]);
      r.lower = parse_number<double>("lower", f[9]);
      r.upper = parse_number<double>("upper", f[10]);
      r.width = parse_number<double>("width", f[11]);
      r.covered = parse_number<int>("covered", f[12]) != 0;
      r.sims_used = parse_number<std::size_t>("sims_used", f[13]);
      r.seed = parse_number<std::uint64_t>("seed", f[14]);
      out.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw IoError(std::string("malformed macro CSV row: ") + e.what());
    }
  }
  return out;
}

nlohmann::json summary_json(const ExperimentSummary& s, const ExperimentConfig& cfg) {
  auto number = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["coverage"] = number(s.coverage);
  j["coverage_se"] = number(s.coverage_se);
  j["mean_width"] = number(s.mean_width);
  j["width_se"] = number(s.width_se);
  j["macros"] = s.macros;
  j["succeeded"] = s.macros - s.failed;
  j["failed"] = s.failed;
  j["failures"] = nlohmann::json::array();
  for (const auto& f : s.failures) j["failures"].push_back({{"macro_id", f.macro_id}, {"message", f.message}});
  j["fallbacks"] = s.fallbacks;
  j["lr_clamped"] = s.lr.clamped;
  j["lr_nonfinite"] = s.lr.nonfinite;
  j["eta_reference"] = number(s.eta_reference);
  j["eta_reference_se"] = number(s.eta_reference_se);
  j["r"] = s.r;
  j["pilot_r_mean"] = number(s.pilot_r_mean);
  j["config"] = config_settings(cfg);
  return j;
}

void emit_report(const ExperimentResult& result, const ExperimentConfig& cfg, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const auto base = std::filesystem::path(dir);
  {
    std::ofstream csv(base / "macros.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write " + (base / "macros.csv").string());
    write_macros_csv(result.records, csv);
    if (!csv) throw IoError("write failed for " + (base / "macros.csv").string());
  }
  std::ofstream json(base / "summary.json", std::ios::binary);
  if (!json) throw IoError("cannot write " + (base / "summary.json").string());
  json << summary_json(result.summary, cfg).dump(2) << '\n';
  if (!json) throw IoError("write failed for " + (base / "summary.json").string());
}

}  // namespace iuq
