#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iuq/param.hpp"
#include "iuq/rng.hpp"

namespace iuq {

/// Row-major table of input observations; every row has the model's width.
class Dataset {
 public:
  explicit Dataset(std::size_t width) : width_(width) {}

  void push(std::span<const double> row);
  void clear() { values_.clear(); }
  void reserve(std::size_t rows) { values_.reserve(rows * width_); }

  std::size_t size() const { return width_ == 0 ? 0 : values_.size() / width_; }
  bool empty() const { return values_.empty(); }
  std::size_t width() const { return width_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * width_, width_}; }

 private:
  std::size_t width_;
  std::vector<double> values_;
};

/// The raw inputs consumed by one simulation run. Each entry records which
/// input source produced it (an exponential coordinate) and its value(s).
class InputTrace {
 public:
  explicit InputTrace(std::size_t width = 1) : width_(width) {}

  void push(std::size_t component, double z) {
    components_.push_back(static_cast<std::uint32_t>(component));
    values_.push_back(z);
  }
  void push(std::span<const double> z);

  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }
  std::size_t width() const { return width_; }
  std::size_t component(std::size_t i) const { return components_[i]; }
  std::span<const double> values(std::size_t i) const { return {values_.data() + i * width_, width_}; }

 private:
  std::size_t width_;
  std::vector<std::uint32_t> components_;
  std::vector<double> values_;
};

/// A parametric input family p(.|theta).
///
/// IndependentExponentials(d): theta holds d rates; an observation is one draw
/// per coordinate, and a trace entry is one scalar draw of a single coordinate.
///
/// Normal: observation ~ N(scale * theta + offset, cov) with cov fixed. With
/// scale = 1 and offset = 0 this is the known-covariance normal whose mean is
/// the unknown parameter; the affine form also describes log-return draws
/// whose mean is a linear function of the drift.
///
/// Objects are immutable after construction.
class InputModel {
 public:
  enum class Family { IndependentExponentials, Normal };

  static InputModel independent_exponentials(std::size_t dim);
  static InputModel normal_known_cov(const Eigen::MatrixXd& cov);
  static InputModel normal_affine_mean(const Eigen::MatrixXd& cov, double scale, const Eigen::VectorXd& offset);

  Family family() const { return family_; }
  std::size_t dim() const { return dim_; }
  /// Values per observation and per trace entry.
  std::size_t observation_width() const { return dim_; }
  std::size_t trace_width() const { return family_ == Family::Normal ? dim_ : 1; }

  bool in_support(const ParamVector& theta) const;
  void require_support(const ParamVector& theta) const;

  /// One observation of all inputs.
  std::vector<double> sample(const ParamVector& theta, Rng& rng) const;
  void sample_into(const ParamVector& theta, Rng& rng, std::span<double> out) const;
  Dataset sample_dataset(const ParamVector& theta, std::size_t count, Rng& rng) const;

  /// Log-density of a full observation; -inf outside the support.
  double log_pdf(const ParamVector& theta, std::span<const double> z) const;
  /// Log-density of one trace entry of the given component.
  double log_pdf_entry(const ParamVector& theta, std::size_t component, std::span<const double> z) const;

  ParamVector mle(const Dataset& data) const;

  /// sum over the trace of log p(z|to) - log p(z|from), by direct density evaluation.
  double log_lr(const InputTrace& trace, const ParamVector& from, const ParamVector& to) const;

  // Fast path: the log-likelihood ratio of both families is linear in a
  // fixed-size summary of the trace, log_lr = dot(lr_coefficients, summary).
  std::size_t summary_size() const;
  std::vector<double> summarize(const InputTrace& trace) const;
  void summarize_into(const InputTrace& trace, std::span<double> out) const;
  std::vector<double> lr_coefficients(const ParamVector& from, const ParamVector& to) const;
  void lr_coefficients_into(const ParamVector& from, const ParamVector& to, std::span<double> out) const;

  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  InputModel(Family family, std::size_t dim) : family_(family), dim_(dim) {}

  Eigen::VectorXd normal_mean(const ParamVector& theta) const;

  Family family_;
  std::size_t dim_;
  // Normal family only.
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd cov_factor_;  // lower Cholesky factor of cov_
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;  // -0.5 * (d log 2pi + log det cov)
  double scale_ = 1.0;
  Eigen::VectorXd offset_;
};

}  // namespace iuq
