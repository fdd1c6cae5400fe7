#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace iuq {

/// A point in input-parameter space. Units are model specific (rates for
/// exponential inputs, drifts for the portfolio model).
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : coords_(dim, fill) {}
  explicit ParamVector(std::vector<double> coords) : coords_(std::move(coords)) {}
  ParamVector(std::initializer_list<double> coords) : coords_(coords) {}

  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }

  std::span<const double> coords() const { return coords_; }
  std::span<double> coords() { return coords_; }

  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

inline double squared_distance(const ParamVector& a, const ParamVector& b) {
  return squared_distance(a.coords(), b.coords());
}

}  // namespace iuq
