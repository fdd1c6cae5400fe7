#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "iuq/input_models.hpp"
#include "iuq/neighbors.hpp"
#include "iuq/param.hpp"
#include "iuq/rng.hpp"
#include "iuq/simulators.hpp"

namespace iuq {

/// Log-weights above this are clamped before exponentiation.
inline constexpr double kMaxLogWeight = 700.0;

struct LrDiagnostics {
  std::size_t clamped = 0;    // log-weights clamped at kMaxLogWeight
  std::size_t nonfinite = 0;  // runs dropped because their log-weight was NaN

  LrDiagnostics& operator+=(const LrDiagnostics& other) {
    clamped += other.clamped;
    nonfinite += other.nonfinite;
    return *this;
  }
};

/// r runs at each of a fixed set of parameters. Each run keeps (Y, A) and the
/// likelihood-ratio summary of its input trace, which is all the estimators
/// need; the raw traces are not retained.
class RunTable {
 public:
  /// Simulates r runs at every parameter; parameter j draws from streams.at(j).
  RunTable(const Simulator& sim, std::vector<ParamVector> params, std::size_t r, const StreamSet& streams);
  /// Wraps runs produced elsewhere. Every parameter needs the same number of runs.
  RunTable(const InputModel& model, std::vector<ParamVector> params, const std::vector<std::vector<SimRun>>& runs);

  std::size_t size() const { return params_.size(); }
  std::size_t r() const { return r_; }
  std::size_t total_runs() const { return params_.size() * r_; }
  std::span<const ParamVector> params() const { return params_; }
  const ParamVector& param(std::size_t j) const { return params_[j]; }
  const InputModel& model() const { return *model_; }

  double y(std::size_t j, std::size_t run) const { return y_[j * r_ + run]; }
  double a(std::size_t j, std::size_t run) const { return a_[j * r_ + run]; }
  double mean_y(std::size_t j) const { return mean_y_[j]; }
  double mean_a(std::size_t j) const { return mean_a_[j]; }
  std::span<const double> mean_y() const { return mean_y_; }
  std::span<const double> mean_a() const { return mean_a_; }

  /// Nonzero entries mark parameters with a nonzero mean A, the only ones pooled.
  std::span<const char> eligible() const { return eligible_; }
  std::size_t eligible_count() const { return eligible_count_; }

  /// LR-weighted run means of (Y, A) at parameter j, reweighted to `target`.
  /// With target == param(j) the result equals (mean_y(j), mean_a(j)) bit for bit.
  std::pair<double, double> lr_means(std::size_t j, const ParamVector& target, LrDiagnostics* diag = nullptr) const;

 private:
  void finish();

  const InputModel* model_;
  std::vector<ParamVector> params_;
  std::size_t r_ = 0;
  std::size_t summary_size_ = 0;
  std::vector<double> y_;
  std::vector<double> a_;
  std::vector<double> summaries_;  // run-major, summary_size_ per run
  std::vector<double> mean_y_;
  std::vector<double> mean_a_;
  std::vector<char> eligible_;
  std::size_t eligible_count_ = 0;
};

enum class EstimatorMethod { Std, Knn, Klr };

std::string_view method_name(EstimatorMethod method);

struct RatioEstimate {
  double value = 0.0;
  EstimatorMethod method = EstimatorMethod::Std;
  std::size_t k_y = 0;
  std::size_t k_a = 0;
  bool fallback = false;     // the zero-denominator rule fired
  double numerator = 0.0;    // pooled Y estimate
  double denominator = 0.0;  // pooled A estimate
  LrDiagnostics lr;
};

using RatioFallback = std::function<RatioEstimate()>;

/// mean(Y) / mean(A). A zero mean(A) invokes `fallback` and flags the result;
/// without a fallback it throws EstimationError.
RatioEstimate std_ratio(std::span<const double> y, std::span<const double> a, const RatioFallback& fallback = {});
/// Standard ratio of the runs stored for parameter j.
RatioEstimate std_ratio(const RunTable& table, std::size_t j, const RatioFallback& fallback = {});

/// Ratio of the k_y-NN mean of Y-bar to the k_a-NN mean of A-bar, pooling only
/// eligible parameters. `index` must be built over table.params().
RatioEstimate knn_ratio(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde,
                        std::size_t k_y, std::size_t k_a);

/// As knn_ratio with each pooled run mean reweighted by its likelihood ratio
/// toward theta_tilde.
RatioEstimate klr_ratio(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde,
                        std::size_t k_y, std::size_t k_a);

/// kLR with k_y = k_a = 1 over the nearest eligible parameter, flagged as a fallback.
RatioEstimate klr_fallback_k1(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde);

}  // namespace iuq
