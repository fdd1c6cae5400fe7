#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "iuq/design.hpp"
#include "iuq/errors.hpp"
#include "support/mvee_oracle.hpp"
#include "support/testbeds.hpp"

using namespace iuq;

TEST_CASE("sample size rule") {
  CHECK(sample_size_rule(50).n == 109);
  CHECK(sample_size_rule(50).n_tilde == 1000);
  CHECK(sample_size_rule(500).n == 1732);
  CHECK(sample_size_rule(500).n_tilde == 1732);
  CHECK(sample_size_rule(1000).n == 3981);
  CHECK(sample_size_rule(1000).n_tilde == 3981);
  CHECK(sample_size_rule(32).n == 64);
  CHECK_THROWS_AS(sample_size_rule(1), ConfigError);
  SampleSizes prev = sample_size_rule(2);
  for (std::size_t m = 3; m < 3000; ++m) {
    const SampleSizes cur = sample_size_rule(m);
    CHECK(cur.n >= prev.n);
    CHECK(cur.n_tilde >= prev.n_tilde);
    CHECK(cur.n_tilde >= 1000);
    prev = cur;
  }
}

TEST_CASE("bootstrap parameters concentrate for large m") {
  const auto model = InputModel::independent_exponentials(1);
  const BootstrapSet boots = bootstrap_params(model, ParamVector{1.0}, 1000000, 20, {1, 0, Phase::Bootstrap});
  CHECK(boots.params.size() == 20);
  for (const auto& p : boots.params) CHECK(std::abs(p[0] - 1.0) < 0.01);
  CHECK_THROWS_AS(bootstrap_params(model, ParamVector{1.0}, 100, 0, {1, 0, Phase::Bootstrap}), ConfigError);
}

TEST_CASE("bootstrap parameters center on the MLE") {
  // Normal mean: the bootstrap MLE is unbiased.
  const auto normal = InputModel::normal_known_cov(Eigen::MatrixXd::Identity(1, 1));
  const BootstrapSet nb = bootstrap_params(normal, ParamVector{0.3}, 100, 10000, {2, 0, Phase::Bootstrap});
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : nb.params) sum += p[0], sum2 += p[0] * p[0];
  double mean = sum / 1e4;
  double se = std::sqrt((sum2 / 1e4 - mean * mean) / 1e4);
  CHECK(std::abs(mean - 0.3) < 3.0 * se);

  // Exponential rate: 1/mean has expectation theta * m / (m - 1).
  const auto exp = InputModel::independent_exponentials(1);
  const BootstrapSet eb = bootstrap_params(exp, ParamVector{1.0}, 100, 10000, {3, 0, Phase::Bootstrap});
  sum = sum2 = 0.0;
  for (const auto& p : eb.params) sum += p[0], sum2 += p[0] * p[0];
  mean = sum / 1e4;
  se = std::sqrt((sum2 / 1e4 - mean * mean) / 1e4);
  CHECK(std::abs(mean - 100.0 / 99.0) < 3.0 * se);
}

TEST_CASE("bootstrap parameters do not depend on the thread schedule") {
  const auto model = InputModel::independent_exponentials(2);
  const StreamSet streams{9, 4, Phase::Bootstrap};
  const BootstrapSet a = bootstrap_params(model, ParamVector{0.5, 1.5}, 50, 300, streams);
  const BootstrapSet b = bootstrap_params(model, ParamVector{0.5, 1.5}, 50, 300, streams);
  CHECK(a.params == b.params);
}

TEST_CASE("enclosing ellipsoid of four symmetric points is the unit circle") {
  const std::vector<ParamVector> pts{{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  const Ellipsoid e = min_enclosing_ellipsoid(pts);
  CHECK(e.center().norm() < 1e-6);
  CHECK((e.shape() - Eigen::Matrix2d::Identity()).norm() < 1e-4);
  for (const auto& p : pts) CHECK(e.membership(p) <= 1.0 + 1e-6);
}

TEST_CASE("enclosing ellipsoid of duplicated points is a tiny ball") {
  const std::vector<ParamVector> pts(5, ParamVector{0.4, 2.0});
  const Ellipsoid e = min_enclosing_ellipsoid(pts);
  CHECK(e.center()[0] == doctest::Approx(0.4));
  CHECK(e.center()[1] == doctest::Approx(2.0));
  CHECK(e.volume() < 1e-15);
  for (const auto& p : pts) CHECK(e.membership(p) <= 1.0 + 1e-6);
}

TEST_CASE("enclosing ellipsoid of collinear points is thin and contains them") {
  std::vector<ParamVector> pts;
  for (int i = 0; i <= 10; ++i) pts.push_back(ParamVector{1.0 + 0.1 * i, 2.0 - 0.05 * i, 3.0});
  const Ellipsoid e = min_enclosing_ellipsoid(pts);
  for (const auto& p : pts) CHECK(e.membership(p) <= 1.0 + 1e-6);
  CHECK(e.membership(ParamVector{1.5, 1.75, 3.0 + 1e-3}) > 1.0);
  // Along the segment the ellipsoid matches the segment's half-length.
  CHECK(e.membership(ParamVector{1.5 + 0.5 * 1.001, 1.75 - 0.25 * 1.001, 3.0}) > 1.0);
}

TEST_CASE("enclosing ellipsoid volume matches a brute-force search") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ParamVector> pts;
  std::vector<testing::Point2> raw;
  for (int i = 0; i < 50; ++i) {
    const double x = 3.0 * u(rng), y = 0.7 * u(rng);
    const double px = 0.8 * x - 0.6 * y + 5.0, py = 0.6 * x + 0.8 * y - 2.0;
    pts.push_back(ParamVector{px, py});
    raw.emplace_back(px, py);
  }
  const Ellipsoid e = min_enclosing_ellipsoid(pts);
  for (const auto& p : pts) CHECK(e.membership(p) <= 1.0 + 1e-6);
  const double oracle = testing::brute_force_ellipse_area(raw);
  CHECK(std::abs(e.volume() / oracle - 1.0) < 0.02);
}

TEST_CASE("uniform draws in an ellipsoid") {
  const Ellipsoid disk(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  Rng rng(17);
  const int n = 100000;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    const ParamVector p = disk.sample_uniform(rng);
    REQUIRE(disk.membership(p) <= 1.0);
    sx += p[0];
    sy += p[1];
  }
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(sx / n) < 3.0 * se);
  CHECK(std::abs(sy / n) < 3.0 * se);
}

TEST_CASE("simulation parameters by mode") {
  const auto model = InputModel::independent_exponentials(2);
  const ParamVector hat{0.5, 1.5};
  const BootstrapSet boots = bootstrap_params(model, hat, 50, 1000, {1, 0, Phase::Bootstrap});
  const SimParamSet ell = sample_sim_params(SamplingMode::Ellipsoid, boots, model, hat, 50, 109, {1, 0, Phase::SimParams});
  CHECK(ell.params.size() == 109);
  const Ellipsoid e = min_enclosing_ellipsoid(boots.params);
  for (const auto& p : ell.params) {
    CHECK(e.membership(p) <= 1.0 + 1e-9);
    CHECK(model.in_support(p));
  }

  const SimParamSet tight =
      sample_sim_params(SamplingMode::Bootstrap, boots, model, hat, 1000000, 10, {1, 0, Phase::SimParams});
  for (const auto& p : tight.params) {
    CHECK(std::abs(p[0] / 0.5 - 1.0) < 0.01);
    CHECK(std::abs(p[1] / 1.5 - 1.0) < 0.01);
  }
}

TEST_CASE("ellipsoid sampling mostly outside the support is a configuration error") {
  const auto model = InputModel::independent_exponentials(1);
  BootstrapSet boots;
  boots.params = {ParamVector{-1000.0}, ParamVector{0.0001}};
  CHECK_THROWS_AS(sample_sim_params(SamplingMode::Ellipsoid, boots, model, ParamVector{1.0}, 10, 50,
                                    {1, 0, Phase::SimParams}),
                  ConfigError);
}

TEST_CASE("sampling mode names") {
  CHECK(parse_sampling_mode("bootstrap") == SamplingMode::Bootstrap);
  CHECK(parse_sampling_mode("ellipsoid") == SamplingMode::Ellipsoid);
  CHECK_THROWS_AS(parse_sampling_mode("grid"), ConfigError);
}

TEST_CASE("analysis of variance statistics") {
  const std::vector<double> v{1.0, 3.0, 5.0, 7.0};
  const AnovaStats s = anova_stats(v, 2, 2);
  CHECK(s.mse == doctest::Approx(2.0));
  CHECK(s.mst == doctest::Approx(16.0));
  CHECK_THROWS_AS(anova_stats(v, 1, 4), ConfigError);
}

TEST_CASE("zeta estimate") {
  // MST / MSE = 0.5 with b = 10, s = 5, r = 7.
  CHECK(zeta_hat(7.0, 10, 5, {2.0, 1.0}) == doctest::Approx(7.0 / 5.0 * (38.0 / 40.0 * 0.5 - 1.0)));
  CHECK(zeta_hat(7.0, 10, 5, {2.0, 1.0}) == doctest::Approx(-0.735));
  CHECK(std::isinf(zeta_hat(3.0, 10, 5, {0.0, 0.0})));
  CHECK(std::isinf(zeta_hat(3.0, 10, 5, {0.0, 4.0})));
  // Linear in r.
  CHECK(zeta_hat(6.0, 10, 5, {1.0, 3.0}) == doctest::Approx(2.0 * zeta_hat(3.0, 10, 5, {1.0, 3.0})));
}

TEST_CASE("r selection meets the threshold at the binding output") {
  const AnovaStats y{1.0, 1.5};
  const AnovaStats a{1.0, 9.0};
  const std::size_t r = select_r(y, a, 50, 50, 0.1, 100000);
  const double zy1 = zeta_hat(1.0, 50, 50, y);
  CHECK(zeta_hat(static_cast<double>(r), 50, 50, y) >= 0.1);
  CHECK(zeta_hat(static_cast<double>(r - 1), 50, 50, y) < 0.1);
  CHECK(r == static_cast<std::size_t>(std::ceil(0.1 / zy1)));
  CHECK(select_r(y, a, 50, 50, 0.1, 5) == 5);
  CHECK_THROWS_AS(select_r({1.0, 0.5}, a, 50, 50, 0.1, 100), EstimationError);
}

TEST_CASE("pilot adds runs until both zeta estimates are positive") {
  // Outputs do not depend on theta, so zeta estimates hover around zero.
  const testing::NormalPairSimulator sim(1.0, 1.0);
  struct Flat final : Simulator {
    const Simulator& inner;
    explicit Flat(const Simulator& s) : inner(s) {}
    const InputModel& trace_model() const override { return inner.trace_model(); }
    SimRun run(const ParamVector&, Rng& rng) const override { return inner.run(ParamVector{0.0}, rng); }
  } flat(sim);
  const auto data_model = InputModel::normal_known_cov(Eigen::MatrixXd::Identity(1, 1));
  PilotOptions opts;
  opts.b = 20;
  opts.s0 = 4;
  opts.ds = 2;
  opts.max_s = 200;
  bool saw_growth = false;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    try {
      const PilotResult res = anova_select_r(flat, data_model, ParamVector{0.0}, 5, opts, {seed, 0, Phase::Pilot});
      CHECK(res.final_s >= opts.s0);
      CHECK((res.final_s - opts.s0) % opts.ds == 0);
      if (res.r < opts.max_r) CHECK(std::min(res.zeta_y, res.zeta_a) >= opts.c_zeta);
      if (res.final_s > opts.s0) saw_growth = true;
    } catch (const EstimationError&) {
      saw_growth = true;
    }
  }
  CHECK(saw_growth);
}

TEST_CASE("fold ranges and the default grid") {
  const auto folds = fold_ranges(10, 3);
  REQUIRE(folds.size() == 3);
  CHECK(folds[0] == std::pair<std::size_t, std::size_t>{0, 4});
  CHECK(folds[1] == std::pair<std::size_t, std::size_t>{4, 7});
  CHECK(folds[2] == std::pair<std::size_t, std::size_t>{7, 10});
  CHECK_THROWS_AS(fold_ranges(3, 4), ConfigError);
  CHECK(default_k_grid(109) == std::vector<std::size_t>{2, 4, 8, 16, 32});
  CHECK(default_k_grid(4) == std::vector<std::size_t>{2});
  CHECK(default_k_grid(3) == std::vector<std::size_t>{1});
}

TEST_CASE("cross validation by hand") {
  const std::vector<ParamVector> params{{0.0}, {1.0}, {2.0}, {3.0}};
  const std::vector<double> means{1.0, 2.0, 4.0, 8.0};
  const CvResult res = cv_select_k(params, means, CvOptions{2, {1, 2}});
  REQUIRE(res.loss.size() == 2);
  CHECK(res.loss[0] == doctest::Approx(13.25));
  CHECK(res.loss[1] == doctest::Approx(22.375));
  CHECK(res.k == 1);
}

TEST_CASE("cross validation on a constant response picks the smallest k") {
  std::vector<ParamVector> params;
  for (int i = 0; i < 40; ++i) params.push_back(ParamVector{0.1 * i});
  const std::vector<double> means(40, 3.0);
  const CvResult res = cv_select_k(params, means, CvOptions{5, {4, 2, 8}});
  for (double l : res.loss) CHECK(l == 0.0);
  CHECK(res.k == 2);
}

TEST_CASE("cross validation skips k larger than a training fold") {
  std::vector<ParamVector> params;
  for (int i = 0; i < 10; ++i) params.push_back(ParamVector{static_cast<double>(i)});
  const std::vector<double> means(10, 1.0);
  const CvResult res = cv_select_k(params, means, CvOptions{5, {1, 8, 9}});
  CHECK(res.candidates == std::vector<std::size_t>{1, 8});
  CHECK(res.skipped == std::vector<std::size_t>{9});
}

TEST_CASE("cross validation prefers larger k for noisier responses") {
  const std::size_t n = 400;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise;
  std::vector<ParamVector> params;
  std::vector<double> quiet, loud;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / n;
    params.push_back(ParamVector{t});
    const double e = noise(rng);
    quiet.push_back(t + 0.001 * e);
    loud.push_back(t + 1.0 * e);
  }
  // Scatter the storage order so folds are not contiguous in theta.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<ParamVector> p2;
  std::vector<double> q2, l2;
  for (std::size_t i : perm) p2.push_back(params[i]), q2.push_back(quiet[i]), l2.push_back(loud[i]);
  const std::size_t k_quiet = cv_select_k(p2, q2, CvOptions{}).k;
  const std::size_t k_loud = cv_select_k(p2, l2, CvOptions{}).k;
  CHECK(k_loud > k_quiet);
}
