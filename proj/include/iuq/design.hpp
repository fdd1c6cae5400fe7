#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iuq/input_models.hpp"
#include "iuq/param.hpp"
#include "iuq/rng.hpp"
#include "iuq/simulators.hpp"

namespace iuq {

// ---------------------------------------------------------------------------
// Sample sizes

struct SampleSizes {
  std::size_t n;        // simulation parameters
  std::size_t n_tilde;  // bootstrap parameters
};

/// n = floor(m^1.2), n_tilde = max(n, 1000).
SampleSizes sample_size_rule(std::size_t m);

// ---------------------------------------------------------------------------
// Bootstrap parameters

struct BootstrapSet {
  std::vector<ParamVector> params;
  ParamVector source;  // theta_hat
  std::size_t m = 0;
};

/// MLE of a fresh size-m sample drawn from p(.|theta_hat). A failed estimate
/// is redrawn once before the error propagates.
ParamVector bootstrap_mle(const InputModel& model, const ParamVector& theta_hat, std::size_t m, Rng& rng);

/// n_tilde independent bootstrap MLEs; parameter i uses streams.at(i).
BootstrapSet bootstrap_params(const InputModel& model, const ParamVector& theta_hat, std::size_t m,
                              std::size_t n_tilde, const StreamSet& streams);

// ---------------------------------------------------------------------------
// Ellipsoids

/// {x : (x - c)' M (x - c) <= 1} with M symmetric positive definite.
class Ellipsoid {
 public:
  Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape);

  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }
  std::size_t dim() const { return static_cast<std::size_t>(center_.size()); }

  double membership(std::span<const double> x) const;
  double membership(const ParamVector& x) const { return membership(x.coords()); }
  /// Volume of the ellipsoid.
  double volume() const;
  /// One point uniformly distributed inside the ellipsoid.
  ParamVector sample_uniform(Rng& rng) const;

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  Eigen::MatrixXd inverse_factor_;  // maps the unit ball onto the ellipsoid
};

struct MveeOptions {
  double tolerance = 1e-7;
  std::size_t max_iterations = 100000;
};

/// Minimum-volume ellipsoid enclosing `points` (Khachiyan's algorithm with
/// Todd-Yildirim away steps). The result is scaled so every input point has
/// membership <= 1. Rank-deficient clouds yield a thin ellipsoid that is
/// minimal within their affine hull and has a tiny ridge across it.
Ellipsoid min_enclosing_ellipsoid(std::span<const ParamVector> points, const MveeOptions& options = {});

// ---------------------------------------------------------------------------
// Simulation parameters

enum class SamplingMode { Bootstrap, Ellipsoid };

SamplingMode parse_sampling_mode(std::string_view name);
std::string_view sampling_name(SamplingMode mode);

struct SimParamSet {
  std::vector<ParamVector> params;
  SamplingMode mode = SamplingMode::Bootstrap;
};

/// Bootstrap mode: n fresh bootstrap MLEs (streams.at(j)). Ellipsoid mode: n
/// uniform draws in the minimum enclosing ellipsoid of `boots`, redrawing any
/// point outside the model support (streams.single()).
SimParamSet sample_sim_params(SamplingMode mode, const BootstrapSet& boots, const InputModel& model,
                              const ParamVector& theta_hat, std::size_t m, std::size_t n,
                              const StreamSet& streams);

// ---------------------------------------------------------------------------
// Choosing r by analysis of variance

struct AnovaStats {
  double mse = 0.0;  // within-parameter mean square
  double mst = 0.0;  // between-parameter mean square
};

/// `values` holds b groups of s outputs, group-major.
AnovaStats anova_stats(std::span<const double> values, std::size_t b, std::size_t s);

/// Estimated ratio of input-uncertainty variance to the simulation-error
/// variance of an r-run mean:
///   (r / s) * ((b(s-1) - 2) / (b(s-1)) * MST / MSE - 1).
/// An output without within-parameter noise (MSE = 0) returns +inf, so a
/// constant output never binds.
double zeta_hat(double r, std::size_t b, std::size_t s, const AnovaStats& stats);

struct PilotOptions {
  std::size_t b = 50;
  std::size_t s0 = 10;
  std::size_t ds = 10;
  std::size_t max_s = 500;
  double c_zeta = 0.1;
  std::size_t max_r = 100000;
};

struct PilotResult {
  std::size_t r = 1;
  std::size_t final_s = 0;
  double zeta_y = 0.0;  // at the returned r
  double zeta_a = 0.0;
};

/// Smallest r >= 1 with min(zeta_Y(r), zeta_A(r)) >= c_zeta, capped at max_r.
/// Requires both zeta estimates at s to be positive.
std::size_t select_r(const AnovaStats& y, const AnovaStats& a, std::size_t b, std::size_t s, double c_zeta,
                     std::size_t max_r);

/// Pilot experiment: b bootstrap parameters at size m, s0 runs at each, Δs
/// more runs per parameter until both zeta estimates are positive.
/// Throws EstimationError when s would exceed max_s.
PilotResult anova_select_r(const Simulator& sim, const InputModel& data_model, const ParamVector& theta_hat,
                           std::size_t m, const PilotOptions& options, const StreamSet& streams);

// ---------------------------------------------------------------------------
// Choosing k by cross validation

struct CvOptions {
  std::size_t folds = 5;
  std::vector<std::size_t> candidates;  // empty: default_k_grid
};

struct CvResult {
  std::size_t k = 1;
  std::vector<std::size_t> candidates;  // evaluated, ascending
  std::vector<double> loss;             // mean fold loss per evaluated candidate
  std::vector<std::size_t> skipped;     // candidates larger than a training fold
};

/// {ceil(2^j) : j = 1..floor(log2(n/2))}; {1} when that set is empty.
std::vector<std::size_t> default_k_grid(std::size_t n);

/// Contiguous fold boundaries; the first n mod K folds get one extra index.
std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t folds);

/// K-fold cross validation of a nearest-neighbor pooled predictor.
/// `contribution(j, i)` is the value training parameter j contributes when
/// predicting held-out parameter i; the prediction with k neighbors is the
/// mean contribution of the k nearest training parameters and the loss is
/// the squared error against targets[i]. Ties in loss go to the smaller k.
CvResult cv_select_k(std::span<const ParamVector> params, std::span<const double> targets,
                     const std::function<double(std::size_t, std::size_t)>& contribution, const CvOptions& options);

/// kNN form: contribution(j, i) = means[j].
CvResult cv_select_k(std::span<const ParamVector> params, std::span<const double> means, const CvOptions& options);

}  // namespace iuq
