#include "iuq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iuq/errors.hpp"
#include "iuq/parallel.hpp"

namespace iuq {

RunTable::RunTable(const Simulator& sim, std::vector<ParamVector> params, std::size_t r, const StreamSet& streams)
    : model_(&sim.trace_model()), params_(std::move(params)), r_(r) {
  if (r_ < 1) throw ConfigError("need at least one run per parameter");
  summary_size_ = model_->summary_size();
  const std::size_t n = params_.size();
  y_.resize(n * r_);
  a_.resize(n * r_);
  summaries_.resize(n * r_ * summary_size_);
  parallel_for(n, [&](std::size_t j) {
    Rng rng = streams.at(j);
    for (std::size_t k = 0; k < r_; ++k) {
      const SimRun run = sim.run(params_[j], rng);
      const std::size_t slot = j * r_ + k;
      y_[slot] = run.y;
      a_[slot] = run.a;
      model_->summarize_into(run.trace, std::span<double>(summaries_).subspan(slot * summary_size_, summary_size_));
    }
  });
  finish();
}

RunTable::RunTable(const InputModel& model, std::vector<ParamVector> params,
                   const std::vector<std::vector<SimRun>>& runs)
    : model_(&model), params_(std::move(params)) {
  if (runs.size() != params_.size()) throw ConfigError("need one run list per parameter");
  r_ = runs.empty() ? 1 : runs.front().size();
  if (r_ < 1) throw ConfigError("need at least one run per parameter");
  summary_size_ = model_->summary_size();
  for (const auto& list : runs) {
    if (list.size() != r_) throw ConfigError("every parameter needs the same number of runs");
    for (const SimRun& run : list) {
      y_.push_back(run.y);
      a_.push_back(run.a);
      const auto s = model_->summarize(run.trace);
      summaries_.insert(summaries_.end(), s.begin(), s.end());
    }
  }
  finish();
}

void RunTable::finish() {
  const std::size_t n = params_.size();
  mean_y_.assign(n, 0.0);
  mean_a_.assign(n, 0.0);
  eligible_.assign(n, 0);
  eligible_count_ = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double sy = 0.0;
    double sa = 0.0;
    for (std::size_t k = 0; k < r_; ++k) {
      sy += y_[j * r_ + k];
      sa += a_[j * r_ + k];
    }
    mean_y_[j] = sy / static_cast<double>(r_);
    mean_a_[j] = sa / static_cast<double>(r_);
    if (mean_a_[j] != 0.0) {
      eligible_[j] = 1;
      ++eligible_count_;
    }
  }
}

std::pair<double, double> RunTable::lr_means(std::size_t j, const ParamVector& target, LrDiagnostics* diag) const {
  thread_local std::vector<double> coeffs;
  coeffs.resize(summary_size_);
  model_->lr_coefficients_into(params_[j], target, coeffs);
  double sy = 0.0;
  double sa = 0.0;
  for (std::size_t k = 0; k < r_; ++k) {
    const std::size_t slot = j * r_ + k;
    const double* s = summaries_.data() + slot * summary_size_;
    double log_w = 0.0;
    for (std::size_t c = 0; c < summary_size_; ++c) log_w += coeffs[c] * s[c];
    if (std::isnan(log_w)) {
      if (diag) ++diag->nonfinite;
      continue;
    }
    if (log_w > kMaxLogWeight) {
      if (diag) ++diag->clamped;
      log_w = kMaxLogWeight;
    }
    const double w = std::exp(log_w);
    sy += y_[slot] * w;
    sa += a_[slot] * w;
  }
  return {sy / static_cast<double>(r_), sa / static_cast<double>(r_)};
}

// ---------------------------------------------------------------------------

std::string_view method_name(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::Std: return "std";
    case EstimatorMethod::Knn: return "knn";
    case EstimatorMethod::Klr: return "klr";
  }
  return "?";
}

namespace {

RatioEstimate plain_ratio(double mean_y, double mean_a, const RatioFallback& fallback) {
  if (mean_a == 0.0) {
    if (!fallback) throw EstimationError("standard ratio has a zero denominator and no fallback");
    RatioEstimate out = fallback();
    out.method = EstimatorMethod::Std;
    out.fallback = true;
    return out;
  }
  RatioEstimate out;
  out.numerator = mean_y;
  out.denominator = mean_a;
  out.value = mean_y / mean_a;
  return out;
}

}  // namespace

RatioEstimate std_ratio(std::span<const double> y, std::span<const double> a, const RatioFallback& fallback) {
  if (y.empty() || y.size() != a.size()) throw ConfigError("standard ratio needs equally many Y and A values");
  double sy = 0.0;
  double sa = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sy += y[i];
    sa += a[i];
  }
  const double r = static_cast<double>(y.size());
  return plain_ratio(sy / r, sa / r, fallback);
}

RatioEstimate std_ratio(const RunTable& table, std::size_t j, const RatioFallback& fallback) {
  return plain_ratio(table.mean_y(j), table.mean_a(j), fallback);
}

namespace {

std::vector<std::size_t> pooled_neighbors(const RunTable& table, const NeighborIndex& index,
                                          const ParamVector& theta_tilde, std::size_t k_y, std::size_t k_a) {
  if (k_y < 1 || k_a < 1) throw ConfigError("k must be at least 1");
  if (index.size() != table.size()) throw ConfigError("neighbor index does not match the run table");
  if (table.eligible_count() == 0) throw EstimationError("no simulation parameter has a nonzero mean A");
  return index.query(theta_tilde.coords(), std::max(k_y, k_a), table.eligible());
}

RatioEstimate finish_ratio(RatioEstimate out) {
  if (out.denominator == 0.0 || !std::isfinite(out.numerator / out.denominator)) {
    throw EstimationError(std::string(method_name(out.method)) + " ratio has a degenerate pooled denominator");
  }
  out.value = out.numerator / out.denominator;
  return out;
}

}  // namespace

RatioEstimate knn_ratio(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde,
                        std::size_t k_y, std::size_t k_a) {
  const auto nn = pooled_neighbors(table, index, theta_tilde, k_y, k_a);
  RatioEstimate out;
  out.method = EstimatorMethod::Knn;
  out.k_y = k_y;
  out.k_a = k_a;
  for (std::size_t i = 0; i < k_y; ++i) out.numerator += table.mean_y(nn[i]);
  for (std::size_t i = 0; i < k_a; ++i) out.denominator += table.mean_a(nn[i]);
  out.numerator /= static_cast<double>(k_y);
  out.denominator /= static_cast<double>(k_a);
  return finish_ratio(out);
}

RatioEstimate klr_ratio(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde,
                        std::size_t k_y, std::size_t k_a) {
  const auto nn = pooled_neighbors(table, index, theta_tilde, k_y, k_a);
  RatioEstimate out;
  out.method = EstimatorMethod::Klr;
  out.k_y = k_y;
  out.k_a = k_a;
  for (std::size_t i = 0; i < nn.size(); ++i) {
    const auto [wy, wa] = table.lr_means(nn[i], theta_tilde, &out.lr);
    if (i < k_y) out.numerator += wy;
    if (i < k_a) out.denominator += wa;
  }
  out.numerator /= static_cast<double>(k_y);
  out.denominator /= static_cast<double>(k_a);
  return finish_ratio(out);
}

RatioEstimate klr_fallback_k1(const RunTable& table, const NeighborIndex& index, const ParamVector& theta_tilde) {
  RatioEstimate out = klr_ratio(table, index, theta_tilde, 1, 1);
  out.fallback = true;
  return out;
}

}  // namespace iuq
