#include "iuq/neighbors.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "iuq/errors.hpp"

namespace iuq {

NeighborIndex::NeighborIndex(std::span<const ParamVector> points) : count_(points.size()) {
  dim_ = points.empty() ? 0 : points.front().size();
  coords_.reserve(count_ * dim_);
  for (const auto& p : points) {
    if (p.size() != dim_) throw ConfigError("neighbor index points must share one dimension");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
}

std::vector<std::size_t> NeighborIndex::query(std::span<const double> q, std::size_t k,
                                              std::span<const char> mask) const {
  if (q.size() != dim_) throw ConfigError("query dimension does not match the index");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(count_);
  for (std::size_t i = 0; i < count_; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    scored.emplace_back(squared_distance(point(i), q), i);
  }
  if (k > scored.size()) {
    throw EstimationError("requested " + std::to_string(k) + " neighbors but only " + std::to_string(scored.size()) +
                          " are eligible");
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

std::vector<std::size_t> NeighborIndex::order_by_distance(std::span<const double> q,
                                                          std::span<const std::size_t> candidates) const {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i : candidates) scored.emplace_back(squared_distance(point(i), q), i);
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> out(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) out[i] = scored[i].second;
  return out;
}

}  // namespace iuq
