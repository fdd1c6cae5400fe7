#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "iuq/cli.hpp"
#include "iuq/errors.hpp"
#include "iuq/harness.hpp"
#include "support/testbeds.hpp"

using namespace iuq;

namespace {

// Y ~ N(theta, 1) and A = 0 on every run.
class NoEventSimulator final : public Simulator {
 public:
  NoEventSimulator() : model_(InputModel::normal_known_cov(Eigen::MatrixXd::Identity(1, 1))) {}
  const InputModel& trace_model() const override { return model_; }
  SimRun run(const ParamVector& theta, Rng& rng) const override {
    std::normal_distribution<double> normal(theta[0], 1.0);
    SimRun out;
    out.trace = InputTrace(1);
    out.y = normal(rng);
    out.trace.push(std::span<const double>(&out.y, 1));
    return out;
  }

 private:
  InputModel model_;
};

Testbed normal_testbed(std::shared_ptr<const Simulator> sim) {
  return Testbed{ModelId::Queue,
                 std::move(sim),
                 InputModel::normal_known_cov(Eigen::MatrixXd::Identity(1, 1)),
                 ParamVector{0.0},
                 2,
                 0.0,
                 0.0};
}

ExperimentConfig small_mm1(EstimatorKind kind) {
  ExperimentConfig cfg;
  cfg.model = ModelId::Queue;
  cfg.estimator = kind;
  cfg.macros = 4;
  cfg.m = 20;
  cfg.r = 3;
  cfg.seed = 17;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("standard budget split") {
  const StdBudget even = std_budget_split(EstimatorKind::StdEven, 1000, 10);
  CHECK(even.r == 100);
  CHECK(even.n_tilde == 100);
  const StdBudget opt = std_budget_split(EstimatorKind::StdOpt, 1000, 10);
  CHECK(opt.r == 22);
  CHECK(opt.n_tilde == 455);
  const StdBudget mm1 = std_budget_split(EstimatorKind::StdEven, 109, 7);
  CHECK(mm1.r == 28);
  CHECK(mm1.n_tilde == 27);
  const StdBudget tiny = std_budget_split(EstimatorKind::StdOpt, 1, 1);
  CHECK(tiny.r == 1);
  CHECK(tiny.n_tilde == 1);

  for (std::size_t n : {10u, 109u, 251u, 1000u}) {
    for (std::size_t r : {1u, 7u, 99u}) {
      for (EstimatorKind kind : {EstimatorKind::StdEven, EstimatorKind::StdOpt}) {
        const StdBudget b = std_budget_split(kind, n, r);
        const double total = static_cast<double>(n * r);
        CHECK(std::abs(static_cast<double>(b.r * b.n_tilde) - total) <= 0.5 * static_cast<double>(b.r) + 1e-9);
      }
    }
  }
}

TEST_CASE("estimator names") {
  for (EstimatorKind k : {EstimatorKind::StdOpt, EstimatorKind::StdEven, EstimatorKind::Knn, EstimatorKind::Klr}) {
    CHECK(parse_estimator_kind(estimator_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_estimator_kind("bayes"), ConfigError);
}

TEST_CASE("settings apply and round trip") {
  ExperimentConfig cfg;
  apply_settings(cfg, {{"model", "san"}, {"m", "200"}, {"estimator", "knn"}, {"r", "auto"},
                       {"pilot.c_zeta", "0.2"}, {"cv.grid", "2, 4,8"}, {"ci", "basic"}});
  CHECK(cfg.model == ModelId::San);
  CHECK(cfg.m == 200);
  CHECK(cfg.estimator == EstimatorKind::Knn);
  CHECK(cfg.auto_r);
  CHECK(cfg.pilot.c_zeta == 0.2);
  CHECK(cfg.cv.candidates == std::vector<std::size_t>{2, 4, 8});
  CHECK(cfg.ci == CiMethod::Basic);

  ExperimentConfig copy;
  apply_settings(copy, config_settings(cfg));
  CHECK(config_settings(copy) == config_settings(cfg));

  CHECK_THROWS_AS(apply_settings(cfg, {{"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(apply_settings(cfg, {{"m", "fifty"}}), ConfigError);
  CHECK_THROWS_AS(apply_settings(cfg, {{"alpha", "1.5"}}), ConfigError);
}

TEST_CASE("settings files and command line flags") {
  std::istringstream text("# experiment\nmodel = erm\n\nmacros=12  # short\nseed = 5\n");
  const auto settings = read_settings(text);
  CHECK(settings.at("model") == "erm");
  CHECK(settings.at("macros") == "12");

  const auto dir = std::filesystem::temp_directory_path() / "iuq_settings_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "exp.cfg";
  std::ofstream(file) << "model = erm\nmacros = 12\nseed = 5\n";
  const ExperimentConfig cfg = parse_run_args({"--config", file.string(), "--seed", "9"});
  CHECK(cfg.model == ModelId::Erm);
  CHECK(cfg.macros == 12);
  CHECK(cfg.seed == 9);
  std::filesystem::remove_all(dir);

  CHECK(parse_run_args({"--macros", "1000"}).macros == 1000);
  CHECK_THROWS_AS(parse_run_args({"--config", "/nonexistent/iuq.cfg"}), IoError);
}

TEST_CASE("one pipeline evaluation") {
  const Testbed tb = make_testbed(ModelId::Queue);
  ExperimentConfig cfg = small_mm1(EstimatorKind::Klr);
  Rng rng = StreamSet{cfg.seed, 0, Phase::Data}.single();
  const Dataset data = tb.data_model.sample_dataset(tb.true_param, 50, rng);
  const IuqContext ctx{&tb, 3, 0};

  const IuqOutcome ell = run_iuq_knn_klr(cfg, ctx, data);
  CHECK(ell.n == 109);
  CHECK(ell.n_tilde == 1000);
  CHECK(ell.sims_used == 109 * 3);
  CHECK(ell.ci.lower <= ell.ci.upper);
  CHECK(ell.k_y >= 1);

  cfg.sampling = SamplingMode::Bootstrap;
  const IuqOutcome boot = run_iuq_knn_klr(cfg, ctx, data);
  CHECK(boot.theta_hat == ell.theta_hat);
  CHECK(boot.sims_used == 109 * 3);

  cfg.estimator = EstimatorKind::StdEven;
  const IuqOutcome std_out = run_iuq_std(cfg, ctx, data);
  CHECK(std_out.r == 18);
  CHECK(std_out.n_tilde == 18);
  CHECK(std_out.sims_used == 18 * 18);
  CHECK_THROWS_AS(run_iuq_knn_klr(cfg, ctx, data), ConfigError);
}

TEST_CASE("a response that never fires A is an estimation error") {
  const Testbed tb = normal_testbed(std::make_shared<NoEventSimulator>());
  ExperimentConfig cfg;
  cfg.sampling = SamplingMode::Bootstrap;
  Rng rng(3);
  const Dataset data = tb.data_model.sample_dataset(tb.true_param, 20, rng);
  const IuqContext ctx{&tb, 2, 0};
  CHECK_THROWS_AS(run_iuq_knn_klr(cfg, ctx, data), EstimationError);
  cfg.estimator = EstimatorKind::StdEven;
  CHECK_THROWS_AS(run_iuq_std(cfg, ctx, data), EstimationError);
}

TEST_CASE("summaries") {
  MacroRecord rec;
  rec.lower = 1.0;
  rec.upper = 2.0;
  rec.width = 1.0;
  rec.covered = true;
  const ExperimentSummary one = summarize_records({rec}, 1);
  CHECK(one.coverage == 1.0);
  CHECK(one.coverage_se == 0.0);
  CHECK(one.mean_width == 1.0);

  std::vector<MacroRecord> recs(4, rec);
  recs[1].covered = false;
  recs[3].width = 3.0;
  const ExperimentSummary s = summarize_records(recs, 5);
  CHECK(s.coverage == 0.75);
  CHECK(s.coverage_se == doctest::Approx(std::sqrt(0.75 * 0.25 / 4)));
  CHECK(s.mean_width == 1.5);
  CHECK(s.failed == 1);
}

TEST_CASE("macro experiment reports and reruns identically") {
  const ExperimentConfig cfg = small_mm1(EstimatorKind::Klr);
  const ExperimentResult a = run_macro_experiment(cfg);
  const ExperimentResult b = run_macro_experiment(cfg);
  REQUIRE(a.records.size() == cfg.macros);
  CHECK(a.records == b.records);

  double covered = 0.0;
  for (const auto& r : a.records) covered += r.covered ? 1.0 : 0.0;
  CHECK(a.summary.coverage == covered / static_cast<double>(a.records.size()));

  std::stringstream csv;
  write_macros_csv(a.records, csv);
  CHECK(read_macros_csv(csv) == a.records);

  const auto dir1 = std::filesystem::temp_directory_path() / "iuq_report_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "iuq_report_b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  emit_report(a, cfg, dir1.string());
  emit_report(b, cfg, dir2.string());
  CHECK(slurp(dir1 / "macros.csv") == slurp(dir2 / "macros.csv"));
  CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));
  const auto json = nlohmann::json::parse(slurp(dir1 / "summary.json"));
  CHECK(json.at("macros") == cfg.macros);
  CHECK(json.at("config").at("estimator") == "klr");
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  std::istringstream bad("macro_id,oops\n");
  CHECK_THROWS_AS(read_macros_csv(bad), IoError);
}

TEST_CASE("standard estimator macro experiment") {
  const ExperimentResult res = run_macro_experiment(small_mm1(EstimatorKind::StdEven));
  REQUIRE(res.records.size() == 4);
  for (const auto& r : res.records) {
    CHECK(r.sampling == "bootstrap");
    CHECK(r.estimator == "std-even");
  }
}

TEST_CASE("an unwritable report directory is an IO error") {
  ExperimentResult empty;
  CHECK_THROWS_AS(emit_report(empty, ExperimentConfig{}, "/proc/iuq/forbidden"), IoError);
}
