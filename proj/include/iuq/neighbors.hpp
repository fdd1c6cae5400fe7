#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iuq/param.hpp"

namespace iuq {

/// Euclidean k-nearest-neighbor queries over a fixed parameter set, by brute
/// force scan. Ties in distance go to the smaller insertion index.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::span<const ParamVector> points);

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

  /// The k entries nearest to `query`, sorted by nondecreasing distance. When
  /// `mask` is non-empty only entries with mask[i] set are eligible.
  /// Throws EstimationError if fewer than k entries are eligible.
  std::vector<std::size_t> query(std::span<const double> query, std::size_t k,
                                 std::span<const char> mask = {}) const;
  std::vector<std::size_t> query(const ParamVector& q, std::size_t k, std::span<const char> mask = {}) const {
    return query(q.coords(), k, mask);
  }

  /// All eligible entries among `candidates` ordered by distance to `query`.
  std::vector<std::size_t> order_by_distance(std::span<const double> query, std::span<const std::size_t> candidates) const;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

}  // namespace iuq
