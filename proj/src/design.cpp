#include "iuq/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "iuq/errors.hpp"
#include "iuq/neighbors.hpp"
#include "iuq/parallel.hpp"

namespace iuq {

SampleSizes sample_size_rule(std::size_t m) {
  if (m < 2) throw ConfigError("input data size m must be at least 2");
  // floor(m^1.2); the nudge keeps exact powers such as 32^1.2 = 64 from rounding down.
  const auto n = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(m), 1.2) * (1.0 + 1e-12)));
  return {n, std::max<std::size_t>(n, 1000)};
}

// ---------------------------------------------------------------------------

ParamVector bootstrap_mle(const InputModel& model, const ParamVector& theta_hat, std::size_t m, Rng& rng) {
  if (m == 0) throw ConfigError("bootstrap sample size must be positive");
  for (int attempt = 0;; ++attempt) {
    const Dataset data = model.sample_dataset(theta_hat, m, rng);
    try {
      return model.mle(data);
    } catch (const EstimationError&) {
      if (attempt >= 1) throw;
    }
  }
}

BootstrapSet bootstrap_params(const InputModel& model, const ParamVector& theta_hat, std::size_t m,
                              std::size_t n_tilde, const StreamSet& streams) {
  if (m < 2) throw ConfigError("bootstrap needs m >= 2");
  if (n_tilde < 1) throw ConfigError("bootstrap needs at least one parameter");
  model.require_support(theta_hat);
  BootstrapSet out;
  out.source = theta_hat;
  out.m = m;
  out.params.resize(n_tilde);
  parallel_for(n_tilde, [&](std::size_t i) {
    Rng rng = streams.at(i);
    out.params[i] = bootstrap_mle(model, theta_hat, m, rng);
  });
  return out;
}

// ---------------------------------------------------------------------------

Ellipsoid::Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape) : center_(std::move(center)), shape_(std::move(shape)) {
  if (shape_.rows() != center_.size() || shape_.cols() != center_.size()) {
    throw ConfigError("ellipsoid shape does not match its center");
  }
  shape_ = 0.5 * (shape_ + shape_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(shape_);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw ConfigError("ellipsoid shape must be positive definite");
  }
  inverse_factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
}

double Ellipsoid::membership(std::span<const double> x) const {
  Eigen::VectorXd diff(center_.size());
  for (Eigen::Index i = 0; i < diff.size(); ++i) diff[i] = x[static_cast<std::size_t>(i)] - center_[i];
  return diff.dot(shape_ * diff);
}

double Ellipsoid::volume() const {
  const double d = static_cast<double>(dim());
  const double unit_ball = std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
  return unit_ball / std::sqrt(shape_.determinant());
}

ParamVector Ellipsoid::sample_uniform(Rng& rng) const {
  const auto d = center_.size();
  std::normal_distribution<double> normal;
  Eigen::VectorXd dir(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = normal(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  const double radius = std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / static_cast<double>(d));
  const Eigen::VectorXd x = center_ + inverse_factor_ * (dir * (radius / norm));
  return ParamVector(std::vector<double>(x.data(), x.data() + d));
}

namespace {

struct CoreEllipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
};

// Full-rank MVEE of the columns of `pts` (r x N). Weights live on the lifted
// points q_i = (p_i, 1); each step moves weight toward the point with the
// largest lifted Mahalanobis norm or away from the smallest one in the support.
CoreEllipsoid khachiyan(const Eigen::MatrixXd& pts, const MveeOptions& options) {
  const Eigen::Index r = pts.rows();
  const Eigen::Index count = pts.cols();
  const double lifted = static_cast<double>(r + 1);

  Eigen::MatrixXd q(r + 1, count);
  q.topRows(r) = pts;
  q.row(r).setOnes();

  Eigen::VectorXd u = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
  Eigen::MatrixXd x_inv;
  Eigen::VectorXd norms(count);

  auto refresh = [&] {
    const Eigen::MatrixXd x = q * u.asDiagonal() * q.transpose();
    x_inv = x.ldlt().solve(Eigen::MatrixXd::Identity(r + 1, r + 1));
    norms = (q.array() * (x_inv * q).array()).colwise().sum().transpose();
  };
  refresh();

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::Index up = 0;
    norms.maxCoeff(&up);
    Eigen::Index down = -1;
    for (Eigen::Index i = 0; i < count; ++i)
      if (u[i] > 0.0 && (down < 0 || norms[i] < norms[down])) down = i;

    const double gain_up = norms[up] / lifted - 1.0;
    const double gain_down = 1.0 - norms[down] / lifted;
    if (std::max(gain_up, gain_down) <= options.tolerance) break;

    const Eigen::Index j = gain_up > gain_down ? up : down;
    const double kappa = norms[j];
    double step = (kappa - lifted) / (lifted * (kappa - 1.0));
    if (step < 0.0) step = std::max(step, -u[j] / (1.0 - u[j]));

    u *= (1.0 - step);
    u[j] += step;
    if (u[j] < 0.0) u[j] = 0.0;

    if (iter % 64 == 63) {
      refresh();
      continue;
    }
    const Eigen::VectorXd w = x_inv * q.col(j);
    const double denom = (1.0 - step) + step * kappa;
    x_inv = (x_inv - (step / denom) * w * w.transpose()) / (1.0 - step);
    const Eigen::VectorXd proj = q.transpose() * w;
    norms = (norms.array() - (step / denom) * proj.array().square()) / (1.0 - step);
  }

  CoreEllipsoid out;
  out.center = pts * u;
  const Eigen::MatrixXd spread = pts * u.asDiagonal() * pts.transpose() - out.center * out.center.transpose();
  out.shape = spread.ldlt().solve(Eigen::MatrixXd::Identity(r, r)) / static_cast<double>(r);
  return out;
}

}  // namespace

Ellipsoid min_enclosing_ellipsoid(std::span<const ParamVector> points, const MveeOptions& options) {
  if (points.empty()) throw ConfigError("enclosing ellipsoid needs at least one point");
  const auto d = static_cast<Eigen::Index>(points.front().size());
  const auto count = static_cast<Eigen::Index>(points.size());
  if (d == 0) throw ConfigError("enclosing ellipsoid needs nonempty points");

  Eigen::MatrixXd raw(d, count);
  double max_abs = 1.0;
  for (Eigen::Index j = 0; j < count; ++j) {
    if (static_cast<Eigen::Index>(points[static_cast<std::size_t>(j)].size()) != d) {
      throw ConfigError("enclosing ellipsoid points must share one dimension");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      raw(i, j) = points[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      max_abs = std::max(max_abs, std::abs(raw(i, j)));
    }
  }
  const Eigen::VectorXd mean = raw.rowwise().mean();
  const Eigen::MatrixXd centered = raw.colwise() - mean;

  // Whitening basis from the SVD of the centered cloud; directions with no
  // spread get a ridge of half-width `thickness`.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::VectorXd& sing = svd.singularValues();
  const double cutoff = sing.size() > 0 ? 1e-10 * sing[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < sing.size() && sing[rank] > cutoff && sing[rank] > 0.0) ++rank;
  const double thickness = 1e-9 * max_abs;

  Eigen::MatrixXd shape = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd center = mean;
  if (rank > 0) {
    const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);
    const double root_n = std::sqrt(static_cast<double>(count));
    // y = whiten * (x - mean) has identity sample covariance.
    const Eigen::MatrixXd whiten = (sing.head(rank).cwiseInverse() * root_n).asDiagonal() * basis.transpose();
    const CoreEllipsoid core = rank + 1 <= count ? khachiyan(whiten * centered, options)
                                                 : CoreEllipsoid{Eigen::VectorXd::Zero(rank),
                                                                 Eigen::MatrixXd::Identity(rank, rank)};
    const Eigen::MatrixXd unwhiten = basis * (sing.head(rank) / root_n).asDiagonal();
    center = mean + unwhiten * core.center;
    shape = whiten.transpose() * core.shape * whiten;
    if (rank < d) shape += (Eigen::MatrixXd::Identity(d, d) - basis * basis.transpose()) / (thickness * thickness);
  } else {
    shape = Eigen::MatrixXd::Identity(d, d) / (thickness * thickness);
  }

  Ellipsoid ellipsoid(center, shape);
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, ellipsoid.membership(p));
  if (worst > 1.0) ellipsoid = Ellipsoid(center, shape / worst);
  return ellipsoid;
}

// ---------------------------------------------------------------------------

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "bootstrap") return SamplingMode::Bootstrap;
  if (name == "ellipsoid") return SamplingMode::Ellipsoid;
  throw ConfigError("unknown sampling mode '" + std::string(name) + "' (expected bootstrap or ellipsoid)");
}

std::string_view sampling_name(SamplingMode mode) {
  return mode == SamplingMode::Bootstrap ? "bootstrap" : "ellipsoid";
}

SimParamSet sample_sim_params(SamplingMode mode, const BootstrapSet& boots, const InputModel& model,
                              const ParamVector& theta_hat, std::size_t m, std::size_t n,
                              const StreamSet& streams) {
  if (n < 1) throw ConfigError("need at least one simulation parameter");
  SimParamSet out;
  out.mode = mode;
  if (mode == SamplingMode::Bootstrap) {
    out.params = bootstrap_params(model, theta_hat, m, n, streams).params;
    return out;
  }

  if (boots.params.empty()) throw ConfigError("ellipsoid sampling needs a bootstrap parameter set");
  const Ellipsoid ellipsoid = min_enclosing_ellipsoid(boots.params);
  Rng rng = streams.single();
  const std::size_t max_attempts = 100 * n;
  std::size_t attempts = 0;
  out.params.reserve(n);
  while (out.params.size() < n) {
    if (attempts == max_attempts) {
      throw ConfigError("ellipsoid sampling rejected more than 99% of draws; the ellipsoid lies mostly outside "
                        "the parameter support");
    }
    ++attempts;
    ParamVector candidate = ellipsoid.sample_uniform(rng);
    if (model.in_support(candidate)) out.params.push_back(std::move(candidate));
  }
  return out;
}

// ---------------------------------------------------------------------------

AnovaStats anova_stats(std::span<const double> values, std::size_t b, std::size_t s) {
  if (b < 2 || s < 2) throw ConfigError("analysis of variance needs b >= 2 and s >= 2");
  if (values.size() != b * s) throw ConfigError("analysis of variance expects b * s values");
  std::vector<double> group_mean(b, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s; ++j) acc += values[i * s + j];
    group_mean[i] = acc / static_cast<double>(s);
    grand += group_mean[i];
  }
  grand /= static_cast<double>(b);

  double within = 0.0;
  double between = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double e = values[i * s + j] - group_mean[i];
      within += e * e;
    }
    const double g = group_mean[i] - grand;
    between += g * g;
  }
  return {within / static_cast<double>(b * (s - 1)), static_cast<double>(s) * between / static_cast<double>(b - 1)};
}

double zeta_hat(double r, std::size_t b, std::size_t s, const AnovaStats& stats) {
  if (!(stats.mse > 0.0)) return std::numeric_limits<double>::infinity();
  const double dof = static_cast<double>(b * (s - 1));
  const double correction = (dof - 2.0) / dof;
  return (r / static_cast<double>(s)) * (correction * stats.mst / stats.mse - 1.0);
}

std::size_t select_r(const AnovaStats& y, const AnovaStats& a, std::size_t b, std::size_t s, double c_zeta,
                     std::size_t max_r) {
  // zeta(r) is linear in r, so the binding output fixes r.
  const double per_run = std::min(zeta_hat(1.0, b, s, y), zeta_hat(1.0, b, s, a));
  if (!(per_run > 0.0)) throw EstimationError("zeta estimates must be positive before choosing r");
  if (std::isinf(per_run)) return 1;
  const double needed = std::ceil(c_zeta / per_run * (1.0 - 1e-12));
  if (needed >= static_cast<double>(max_r)) return max_r;
  return std::max<std::size_t>(1, static_cast<std::size_t>(needed));
}

PilotResult anova_select_r(const Simulator& sim, const InputModel& data_model, const ParamVector& theta_hat,
                           std::size_t m, const PilotOptions& options, const StreamSet& streams) {
  const std::size_t b = options.b;
  if (b < 2 || options.s0 < 2) throw ConfigError("pilot needs b >= 2 and s0 >= 2");
  if (options.ds < 1) throw ConfigError("pilot increment must be positive");

  std::vector<Rng> rngs;
  std::vector<ParamVector> params;
  rngs.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    rngs.push_back(streams.at(i));
    params.push_back(bootstrap_mle(data_model, theta_hat, m, rngs.back()));
  }
  std::vector<std::vector<double>> ys(b);
  std::vector<std::vector<double>> as(b);
  auto extend = [&](std::size_t runs) {
    parallel_for(b, [&](std::size_t i) {
      for (std::size_t j = 0; j < runs; ++j) {
        const SimRun run = sim.run(params[i], rngs[i]);
        ys[i].push_back(run.y);
        as[i].push_back(run.a);
      }
    });
  };

  std::size_t s = options.s0;
  extend(s);
  for (;;) {
    std::vector<double> flat_y;
    std::vector<double> flat_a;
    flat_y.reserve(b * s);
    flat_a.reserve(b * s);
    for (std::size_t i = 0; i < b; ++i) {
      flat_y.insert(flat_y.end(), ys[i].begin(), ys[i].end());
      flat_a.insert(flat_a.end(), as[i].begin(), as[i].end());
    }
    const AnovaStats stats_y = anova_stats(flat_y, b, s);
    const AnovaStats stats_a = anova_stats(flat_a, b, s);
    const double zy = zeta_hat(static_cast<double>(s), b, s, stats_y);
    const double za = zeta_hat(static_cast<double>(s), b, s, stats_a);
    if (zy > 0.0 && za > 0.0) {
      PilotResult out;
      out.final_s = s;
      out.r = select_r(stats_y, stats_a, b, s, options.c_zeta, options.max_r);
      out.zeta_y = zeta_hat(static_cast<double>(out.r), b, s, stats_y);
      out.zeta_a = zeta_hat(static_cast<double>(out.r), b, s, stats_a);
      return out;
    }
    if (s + options.ds > options.max_s) {
      throw EstimationError("pilot did not reach positive zeta estimates by s = " + std::to_string(s) +
                            " (zeta_Y = " + std::to_string(zy) + ", zeta_A = " + std::to_string(za) + ")");
    }
    extend(options.ds);
    s += options.ds;
  }
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> default_k_grid(std::size_t n) {
  std::vector<std::size_t> grid;
  const double half = static_cast<double>(n) / 2.0;
  for (std::size_t k = 2; static_cast<double>(k) <= half; k *= 2) grid.push_back(k);
  if (grid.empty()) grid.push_back(1);
  return grid;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t folds) {
  if (folds < 2 || folds > n) throw ConfigError("cross validation needs 2 <= K <= n");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < folds; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    out.emplace_back(begin, begin + size);
    begin += size;
  }
  return out;
}

CvResult cv_select_k(std::span<const ParamVector> params, std::span<const double> targets,
                     const std::function<double(std::size_t, std::size_t)>& contribution, const CvOptions& options) {
  const std::size_t n = params.size();
  if (targets.size() != n) throw ConfigError("cross validation needs one target per parameter");
  const auto folds = fold_ranges(n, options.folds);
  std::size_t largest_fold = 0;
  for (const auto& [b, e] : folds) largest_fold = std::max(largest_fold, e - b);
  const std::size_t min_training = n - largest_fold;

  std::vector<std::size_t> grid = options.candidates.empty() ? default_k_grid(n) : options.candidates;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  CvResult out;
  for (std::size_t k : grid) {
    if (k == 0) throw ConfigError("candidate k must be positive");
    (k <= min_training ? out.candidates : out.skipped).push_back(k);
  }
  if (out.candidates.empty()) throw ConfigError("no candidate k fits inside a training fold");
  const std::size_t k_max = out.candidates.back();

  const NeighborIndex index(params);
  out.loss.assign(out.candidates.size(), 0.0);
  std::vector<double> fold_loss(out.candidates.size());
  std::vector<std::size_t> training;
  for (const auto& [begin, end] : folds) {
    training.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j < begin || j >= end) training.push_back(j);
    std::fill(fold_loss.begin(), fold_loss.end(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto order = index.order_by_distance(params[i].coords(), training);
      double pooled = 0.0;
      std::size_t c = 0;
      for (std::size_t t = 0; t < k_max; ++t) {
        pooled += contribution(order[t], i);
        if (t + 1 == out.candidates[c]) {
          const double err = targets[i] - pooled / static_cast<double>(t + 1);
          fold_loss[c] += err * err;
          ++c;
        }
      }
    }
    for (std::size_t c = 0; c < fold_loss.size(); ++c) {
      out.loss[c] += fold_loss[c] / static_cast<double>(end - begin) / static_cast<double>(folds.size());
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < out.loss.size(); ++c)
    if (out.loss[c] < out.loss[best]) best = c;
  out.k = out.candidates[best];
  return out;
}

CvResult cv_select_k(std::span<const ParamVector> params, std::span<const double> means, const CvOptions& options) {
  return cv_select_k(params, means, [means](std::size_t j, std::size_t) { return means[j]; }, options);
}

}  // namespace iuq
