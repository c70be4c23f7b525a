#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/metadata.hpp"
#include "evlog/split_opt.hpp"

namespace evlog {

/// Filters of one behavior whose events share merged rows.
struct FeatureGroup {
  BehaviorId behavior = 0;
  std::vector<FilterId> members;       // ascending
  std::vector<std::uint64_t> events;   // E(g) = ∪ E(f), sorted
  std::vector<std::string> attrs;      // A(g) = ∪ A(f), catalog order
  std::uint64_t attr_bytes = 0;        // Size(A(g))

  std::size_t size() const noexcept { return members.size(); }
};

/// Builds a group and fills its caches. Members must share one behavior.
FeatureGroup make_group(std::vector<FilterId> members, const ProfileMetadata& meta, const Catalog& catalog);
/// Union of two groups (caches recomputed from the parts).
FeatureGroup merge_groups(const FeatureGroup& a, const FeatureGroup& b, const Catalog& catalog);

std::uint64_t group_data_size(const FeatureGroup& g);
std::uint64_t group_index_size(const FeatureGroup& g, std::uint64_t addr_bytes, std::size_t max_group_size);

/// Net storage savings of merging g1 and g2, in bytes. Positive = smaller.
std::int64_t edge_weight(const FeatureGroup& g1, const FeatureGroup& g2, const Catalog& catalog,
                         std::uint64_t addr_bytes);

/// Σ over groups of data + index, each group priced at its own size.
std::uint64_t modeled_size(const std::vector<FeatureGroup>& groups, std::uint64_t addr_bytes);

struct MergeIteration {
  std::size_t groups_before = 0;
  std::size_t merges = 0;
  std::uint64_t size_before = 0;
  std::uint64_t size_after = 0;
};

struct MergeResult {
  std::vector<FeatureGroup> groups;  // ordered by smallest member
  std::vector<MergeIteration> trace; // one entry per iteration that merged something
};

/// Pairwise hierarchical merging for one behavior's filters.
MergeResult hierarchical_merge(const ProfileMetadata& meta, const Catalog& catalog, BehaviorId behavior);

struct MergeConfig {
  std::map<BehaviorId, std::vector<std::vector<FilterId>>> groups;
  std::map<FilterId, std::uint16_t> slot_column;
  std::map<ShardId, std::uint16_t> slot_count;

  /// Index of the group holding `filter` within its behavior's list.
  std::size_t group_index(FilterId filter, BehaviorId behavior) const;
  std::uint16_t slots_for(ShardId shard) const;

  nlohmann::json to_json() const;
  static MergeConfig from_json(const nlohmann::json& j);

  bool operator==(const MergeConfig&) const = default;
};

/// Member i of each group (ascending ids) gets slot column i; a shard's
/// slot_count is its largest group. Shards with no groups get 1.
MergeConfig build_merge_config(const std::map<BehaviorId, std::vector<std::vector<FilterId>>>& groups,
                               const SplitConfig& split);

/// Every filter alone in its group.
MergeConfig singleton_merge_config(const Catalog& catalog, const SplitConfig& split);

/// Runs hierarchical_merge for every behavior.
std::map<BehaviorId, MergeResult> merge_all(const ProfileMetadata& meta, const Catalog& catalog);

}  // namespace evlog
