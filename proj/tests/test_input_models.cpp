#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "iuq/errors.hpp"
#include "iuq/input_models.hpp"

using namespace iuq;

namespace {

InputTrace exp_trace(std::initializer_list<std::pair<std::size_t, double>> entries) {
  InputTrace t(1);
  for (const auto& [c, z] : entries) t.push(c, z);
  return t;
}

Dataset rows(std::size_t width, std::initializer_list<std::vector<double>> values) {
  Dataset d(width);
  for (const auto& v : values) d.push(v);
  return d;
}

}  // namespace

TEST_CASE("exponential draws are positive with mean 1/rate") {
  const auto model = InputModel::independent_exponentials(1);
  Rng rng(11);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double z = model.sample(ParamVector{2.0}, rng)[0];
    REQUIRE(z > 0.0);
    sum += z;
  }
  const double se = 0.5 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - 0.5) < 3.0 * se);
}

TEST_CASE("normal draws reproduce the known covariance") {
  const auto model = InputModel::normal_known_cov(Eigen::Matrix2d::Identity());
  Rng rng(12);
  const int n = 1000000;
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  Eigen::Vector2d first = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const auto z = model.sample(ParamVector{0.0, 0.0}, rng);
    const Eigen::Vector2d v(z[0], z[1]);
    first += v;
    second += v * v.transpose();
  }
  first /= n;
  const Eigen::Matrix2d cov = second / n - first * first.transpose();
  CHECK((cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("sampling outside the support is a domain error") {
  const auto model = InputModel::independent_exponentials(2);
  Rng rng(1);
  CHECK_FALSE(model.in_support(ParamVector{1.0, -0.5}));
  CHECK_THROWS_AS(model.sample(ParamVector{1.0, -0.5}, rng), DomainError);
  CHECK_THROWS_AS(model.sample(ParamVector{0.0, 1.0}, rng), DomainError);
}

TEST_CASE("log densities") {
  const auto exp = InputModel::independent_exponentials(1);
  const double zero = 0.0;
  const double one = 1.0;
  CHECK(exp.log_pdf(ParamVector{1.0}, {&zero, 1}) == doctest::Approx(0.0));
  CHECK(exp.log_pdf(ParamVector{2.0}, {&one, 1}) == doctest::Approx(std::log(2.0) - 2.0));
  const double negative = -0.1;
  CHECK(std::isinf(exp.log_pdf(ParamVector{1.0}, {&negative, 1})));

  const auto normal = InputModel::normal_known_cov(Eigen::MatrixXd::Identity(1, 1));
  CHECK(normal.log_pdf(ParamVector{0.0}, {&zero, 1}) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
}

TEST_CASE("maximum likelihood estimates") {
  const auto exp = InputModel::independent_exponentials(1);
  CHECK(exp.mle(rows(1, {{1.0}, {2.0}, {3.0}}))[0] == doctest::Approx(0.5));
  CHECK(exp.mle(rows(1, {{0.25}, {0.25}, {0.25}}))[0] == doctest::Approx(4.0));
  CHECK_THROWS_AS(exp.mle(Dataset(1)), EstimationError);
  CHECK_THROWS_AS(exp.mle(rows(1, {{0.0}, {0.0}})), EstimationError);

  const auto normal = InputModel::normal_known_cov(Eigen::Matrix2d::Identity());
  const ParamVector mean = normal.mle(rows(2, {{1.0, 2.0}, {3.0, 4.0}}));
  CHECK(mean[0] == doctest::Approx(2.0));
  CHECK(mean[1] == doctest::Approx(3.0));
}

TEST_CASE("maximum likelihood error shrinks with the data size") {
  const auto model = InputModel::independent_exponentials(2);
  const ParamVector truth{0.7, 1.9};
  Rng rng(99);
  std::vector<double> errors;
  for (std::size_t m : {100u, 10000u, 1000000u}) {
    double err = 0.0;
    for (int rep = 0; rep < 5; ++rep) err += std::sqrt(squared_distance(model.mle(model.sample_dataset(truth, m, rng)), truth));
    errors.push_back(err / 5.0);
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
}

TEST_CASE("log likelihood ratio basics") {
  const auto model = InputModel::independent_exponentials(1);
  const InputTrace single = exp_trace({{0, 1.0}});
  CHECK(model.log_lr(single, ParamVector{1.0}, ParamVector{2.0}) == doctest::Approx(std::log(2.0) - 1.0));
  CHECK(model.log_lr(single, ParamVector{1.3}, ParamVector{1.3}) == 0.0);
}

TEST_CASE("log likelihood ratio is antisymmetric and matches its summary form") {
  Rng rng(5);
  std::uniform_real_distribution<double> rate(0.2, 3.0);

  const auto exp = InputModel::independent_exponentials(3);
  for (int rep = 0; rep < 50; ++rep) {
    const ParamVector a{rate(rng), rate(rng), rate(rng)};
    const ParamVector b{rate(rng), rate(rng), rate(rng)};
    InputTrace trace(1);
    for (int i = 0; i < 20; ++i) {
      const std::size_t c = static_cast<std::size_t>(i % 3);
      trace.push(c, exp.sample(a, rng)[c]);
    }
    const double forward = exp.log_lr(trace, a, b);
    CHECK(forward == doctest::Approx(-exp.log_lr(trace, b, a)));
    const auto s = exp.summarize(trace);
    const auto c = exp.lr_coefficients(a, b);
    double dot = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dot += s[i] * c[i];
    CHECK(dot == doctest::Approx(forward).epsilon(1e-10));
  }

  Eigen::Matrix2d cov;
  cov << 1.0, 0.3, 0.3, 0.5;
  const auto normal = InputModel::normal_affine_mean(cov, 0.25, Eigen::Vector2d(-0.1, 0.2));
  std::normal_distribution<double> drift(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const ParamVector a{drift(rng), drift(rng)};
    const ParamVector b{drift(rng), drift(rng)};
    InputTrace trace(2);
    for (int i = 0; i < 4; ++i) trace.push(normal.sample(a, rng));
    const double forward = normal.log_lr(trace, a, b);
    CHECK(forward == doctest::Approx(-normal.log_lr(trace, b, a)));
    const auto s = normal.summarize(trace);
    const auto c = normal.lr_coefficients(a, b);
    double dot = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dot += s[i] * c[i];
    CHECK(dot == doctest::Approx(forward).epsilon(1e-10));
    const auto same = normal.lr_coefficients(a, a);
    for (double x : same) CHECK(x == 0.0);
  }
}

TEST_CASE("likelihood ratio weights have mean one and reweight expectations") {
  const auto model = InputModel::independent_exponentials(1);
  const ParamVector from{1.0};
  const ParamVector to{1.2};
  Rng rng(2024);
  const int n = 1000000;
  double sw = 0.0, sw2 = 0.0, sg = 0.0, sg2 = 0.0;
  for (int i = 0; i < n; ++i) {
    InputTrace trace(1);
    double g = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double z = model.sample(from, rng)[0];
      trace.push(0, z);
      g += z;
    }
    const double w = std::exp(model.log_lr(trace, from, to));
    sw += w;
    sw2 += w * w;
    sg += g * w;
    sg2 += g * w * g * w;
  }
  const double mw = sw / n;
  const double se_w = std::sqrt((sw2 / n - mw * mw) / n);
  CHECK(std::abs(mw - 1.0) < 3.0 * se_w);
  const double mg = sg / n;
  const double se_g = std::sqrt((sg2 / n - mg * mg) / n);
  CHECK(std::abs(mg - 3.0 / 1.2) < 3.0 * se_g);
}

TEST_CASE("normal model rejects a covariance that is not positive definite") {
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(InputModel::normal_known_cov(bad), ConfigError);
}
