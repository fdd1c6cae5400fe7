#include "iuq/ci.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "iuq/errors.hpp"

namespace iuq {

CiMethod parse_ci_method(std::string_view name) {
  if (name == "percentile") return CiMethod::Percentile;
  if (name == "basic") return CiMethod::Basic;
  throw ConfigError("unknown CI method '" + std::string(name) + "' (expected percentile or basic)");
}

std::string_view ci_method_name(CiMethod method) {
  return method == CiMethod::Percentile ? "percentile" : "basic";
}

namespace {

// 1-indexed rank ceil(n * alpha); the slack absorbs products such as
// 100 * 0.95 = 95.00000000000001.
std::size_t quantile_rank(std::size_t n, double alpha) {
  const double raw = std::ceil(static_cast<double>(n) * alpha - 1e-9);
  return std::clamp<std::size_t>(raw < 1.0 ? 1 : static_cast<std::size_t>(raw), 1, n);
}

void check_inputs(std::span<const double> estimates, double alpha) {
  if (estimates.size() < 2) throw ConfigError("a bootstrap CI needs at least two estimates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

}  // namespace

double empirical_quantile(std::span<const double> values, double alpha) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("quantile level must lie in (0, 1]");
  std::vector<double> work(values.begin(), values.end());
  const std::size_t rank = quantile_rank(work.size(), alpha);
  auto nth = work.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

CIResult percentile_ci(std::span<const double> estimates, double alpha) {
  check_inputs(estimates, alpha);
  CIResult out;
  out.lower = empirical_quantile(estimates, alpha / 2.0);
  out.upper = empirical_quantile(estimates, 1.0 - alpha / 2.0);
  out.alpha = alpha;
  out.method = CiMethod::Percentile;
  out.n_used = estimates.size();
  return out;
}

CIResult basic_ci(std::span<const double> estimates, double center, double alpha) {
  const CIResult pct = percentile_ci(estimates, alpha);
  CIResult out = pct;
  out.lower = 2.0 * center - pct.upper;
  out.upper = 2.0 * center - pct.lower;
  out.method = CiMethod::Basic;
  return out;
}

}  // namespace iuq
