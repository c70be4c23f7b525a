#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace evlog {

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  std::int64_t weight = 0;
};

using MatchedPair = std::pair<std::size_t, std::size_t>;  // first < second

/// Raw Edmonds blossom solver (O(n^3), integer duals). Returns the mate of
/// each vertex or -1. Any maximum-weight matching may come back; use
/// `max_weight_matching` for the deterministic one.
std::vector<std::ptrdiff_t> blossom_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges);

/// Exact maximum-weight matching on a general graph.
///
/// Edges with weight <= 0 and self loops are ignored; for parallel edges the
/// heaviest one counts. Among all optimal matchings the one whose sorted edge
/// list is lexicographically smallest is returned, so results do not depend
/// on edge input order.
std::vector<MatchedPair> max_weight_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges);

/// Total weight of `matching` under `edges` (heaviest parallel edge).
std::int64_t matching_weight(std::span<const MatchedPair> matching, std::span<const WeightedEdge> edges);

}  // namespace evlog
