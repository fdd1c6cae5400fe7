#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace iuq {

enum class CiMethod { Percentile, Basic };

CiMethod parse_ci_method(std::string_view name);
std::string_view ci_method_name(CiMethod method);

struct CIResult {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;  // nominal level is 1 - alpha
  CiMethod method = CiMethod::Percentile;
  std::size_t n_used = 0;
  std::string estimator;

  double width() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// The ceil(n * alpha)-th order statistic (1-indexed) of `values`.
double empirical_quantile(std::span<const double> values, double alpha);

/// [q(alpha/2), q(1 - alpha/2)].
CIResult percentile_ci(std::span<const double> estimates, double alpha);

/// [2h - q(1 - alpha/2), 2h - q(alpha/2)] with h the estimate at the MLE.
CIResult basic_ci(std::span<const double> estimates, double center, double alpha);

}  // namespace iuq
