#include "iuq/input_models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "iuq/errors.hpp"

namespace iuq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void Dataset::push(std::span<const double> row) {
  if (row.size() != width_) throw ConfigError("dataset row has width " + std::to_string(row.size()));
  values_.insert(values_.end(), row.begin(), row.end());
}

void InputTrace::push(std::span<const double> z) {
  if (z.size() != width_) throw ConfigError("trace entry has width " + std::to_string(z.size()));
  components_.push_back(0);
  values_.insert(values_.end(), z.begin(), z.end());
}

InputModel InputModel::independent_exponentials(std::size_t dim) {
  if (dim == 0) throw ConfigError("exponential model needs at least one coordinate");
  return InputModel(Family::IndependentExponentials, dim);
}

InputModel InputModel::normal_known_cov(const Eigen::MatrixXd& cov) {
  return normal_affine_mean(cov, 1.0, Eigen::VectorXd::Zero(cov.rows()));
}

InputModel InputModel::normal_affine_mean(const Eigen::MatrixXd& cov, double scale, const Eigen::VectorXd& offset) {
  const auto d = static_cast<std::size_t>(cov.rows());
  if (d == 0 || cov.rows() != cov.cols()) throw ConfigError("normal model needs a square covariance");
  if (static_cast<std::size_t>(offset.size()) != d) throw ConfigError("normal model offset has wrong length");
  if (!(scale != 0.0 && std::isfinite(scale))) throw ConfigError("normal model mean scale must be finite and nonzero");
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw ConfigError("covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");

  InputModel model(Family::Normal, d);
  model.cov_ = cov;
  model.cov_factor_ = llt.matrixL();
  model.precision_ = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  const double log_det = 2.0 * model.cov_factor_.diagonal().array().log().sum();
  model.log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
  model.scale_ = scale;
  model.offset_ = offset;
  return model;
}

bool InputModel::in_support(const ParamVector& theta) const {
  if (theta.size() != dim_) return false;
  for (double v : theta) {
    if (!std::isfinite(v)) return false;
    if (family_ == Family::IndependentExponentials && !(v > 0.0)) return false;
  }
  return true;
}

void InputModel::require_support(const ParamVector& theta) const {
  if (theta.size() != dim_) {
    throw DomainError("parameter has dimension " + std::to_string(theta.size()) + ", model expects " +
                      std::to_string(dim_));
  }
  if (!in_support(theta)) throw DomainError("parameter lies outside the model support");
}

Eigen::VectorXd InputModel::normal_mean(const ParamVector& theta) const {
  Eigen::VectorXd mean(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < dim_; ++i) mean[static_cast<Eigen::Index>(i)] = scale_ * theta[i] + offset_[static_cast<Eigen::Index>(i)];
  return mean;
}

std::vector<double> InputModel::sample(const ParamVector& theta, Rng& rng) const {
  std::vector<double> out(dim_);
  sample_into(theta, rng, out);
  return out;
}

void InputModel::sample_into(const ParamVector& theta, Rng& rng, std::span<double> out) const {
  require_support(theta);
  if (family_ == Family::IndependentExponentials) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = std::exponential_distribution<double>(theta[i])(rng);
    return;
  }
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(dim_));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Eigen::VectorXd x = normal_mean(theta) + cov_factor_ * z;
  for (std::size_t i = 0; i < dim_; ++i) out[i] = x[static_cast<Eigen::Index>(i)];
}

Dataset InputModel::sample_dataset(const ParamVector& theta, std::size_t count, Rng& rng) const {
  Dataset data(dim_);
  data.reserve(count);
  std::vector<double> row(dim_);
  for (std::size_t i = 0; i < count; ++i) {
    sample_into(theta, rng, row);
    data.push(row);
  }
  return data;
}

double InputModel::log_pdf(const ParamVector& theta, std::span<const double> z) const {
  require_support(theta);
  if (family_ == Family::IndependentExponentials) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (z[i] < 0.0) return kNegInf;
      acc += std::log(theta[i]) - theta[i] * z[i];
    }
    return acc;
  }
  return log_pdf_entry(theta, 0, z);
}

double InputModel::log_pdf_entry(const ParamVector& theta, std::size_t component, std::span<const double> z) const {
  require_support(theta);
  if (family_ == Family::IndependentExponentials) {
    if (component >= dim_) throw DomainError("trace component out of range");
    if (z[0] < 0.0) return kNegInf;
    return std::log(theta[component]) - theta[component] * z[0];
  }
  Eigen::VectorXd diff(static_cast<Eigen::Index>(dim_));
  const Eigen::VectorXd mean = normal_mean(theta);
  for (std::size_t i = 0; i < dim_; ++i) diff[static_cast<Eigen::Index>(i)] = z[i] - mean[static_cast<Eigen::Index>(i)];
  return log_norm_ - 0.5 * diff.dot(precision_ * diff);
}

ParamVector InputModel::mle(const Dataset& data) const {
  if (data.empty()) throw EstimationError("maximum likelihood needs at least one observation");
  if (data.width() != dim_) throw EstimationError("dataset width does not match the model");
  std::vector<double> mean(dim_, 0.0);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto row = data.row(r);
    for (std::size_t i = 0; i < dim_; ++i) mean[i] += row[i];
  }
  for (double& v : mean) v /= static_cast<double>(data.size());

  ParamVector theta(dim_);
  if (family_ == Family::IndependentExponentials) {
    for (std::size_t i = 0; i < dim_; ++i) {
      if (!(mean[i] > 0.0) || !std::isfinite(mean[i])) {
        throw EstimationError("exponential sample mean must be positive and finite");
      }
      theta[i] = 1.0 / mean[i];
    }
    return theta;
  }
  for (std::size_t i = 0; i < dim_; ++i) theta[i] = (mean[i] - offset_[static_cast<Eigen::Index>(i)]) / scale_;
  return theta;
}

double InputModel::log_lr(const InputTrace& trace, const ParamVector& from, const ParamVector& to) const {
  require_support(from);
  require_support(to);
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto z = trace.values(i);
    acc += log_pdf_entry(to, trace.component(i), z) - log_pdf_entry(from, trace.component(i), z);
  }
  return acc;
}

std::size_t InputModel::summary_size() const {
  // Exponentials: per-coordinate counts then sums. Normal: entry count then the vector sum.
  return family_ == Family::IndependentExponentials ? 2 * dim_ : 1 + dim_;
}

std::vector<double> InputModel::summarize(const InputTrace& trace) const {
  std::vector<double> out(summary_size());
  summarize_into(trace, out);
  return out;
}

void InputModel::summarize_into(const InputTrace& trace, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (family_ == Family::IndependentExponentials) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const std::size_t c = trace.component(i);
      out[c] += 1.0;
      out[dim_ + c] += trace.values(i)[0];
    }
    return;
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out[0] += 1.0;
    const auto z = trace.values(i);
    for (std::size_t j = 0; j < dim_; ++j) out[1 + j] += z[j];
  }
}

std::vector<double> InputModel::lr_coefficients(const ParamVector& from, const ParamVector& to) const {
  std::vector<double> out(summary_size());
  lr_coefficients_into(from, to, out);
  return out;
}

void InputModel::lr_coefficients_into(const ParamVector& from, const ParamVector& to, std::span<double> out) const {
  if (family_ == Family::IndependentExponentials) {
    for (std::size_t i = 0; i < dim_; ++i) {
      out[i] = std::log(to[i] / from[i]);
      out[dim_ + i] = -(to[i] - from[i]);
    }
    return;
  }
  // log N(z; m1, C) - log N(z; m0, C) = (m1 - m0)' P z - (m1' P m1 - m0' P m0) / 2
  const Eigen::VectorXd m0 = normal_mean(from);
  const Eigen::VectorXd m1 = normal_mean(to);
  const Eigen::VectorXd linear = precision_ * (m1 - m0);
  out[0] = -0.5 * (m1.dot(precision_ * m1) - m0.dot(precision_ * m0));
  for (std::size_t j = 0; j < dim_; ++j) out[1 + j] = linear[static_cast<Eigen::Index>(j)];
}

}  // namespace iuq
