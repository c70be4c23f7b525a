#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/ingest.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"
#include "evlog/metadata.hpp"

namespace evlog {

struct IOStats {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_written = 0;
  std::uint64_t rows_deleted = 0;
  std::uint64_t cells_rewritten = 0;
  std::uint64_t rows_modified = 0;  // kept rows whose slot cells changed
  std::uint64_t rows_resized = 0;   // kept rows that only gained or lost empty slots

  /// Row-level operations: reads, writes, deletes and in-place modifications.
  std::uint64_t row_ops() const noexcept { return rows_read + rows_written + rows_deleted + rows_modified; }

  IOStats& operator+=(const IOStats& o) noexcept;
  nlohmann::json to_json() const;
  bool operator==(const IOStats&) const = default;
};

using GroupList = std::vector<std::vector<FilterId>>;

struct BipartiteEdge {
  std::size_t old_group = 0;
  std::size_t new_group = 0;
  std::uint64_t weight = 0;  // |E(g) ∩ E(g')|
};

struct BipartiteGraph {
  std::size_t old_count = 0;
  std::size_t new_count = 0;
  std::vector<BipartiteEdge> edges;  // zero-weight pairs left out
};

/// Group event set E(g) = ∪ E(f) over members.
std::vector<std::uint64_t> group_events(const std::vector<FilterId>& members, const ProfileMetadata& meta);

BipartiteGraph build_bipartite(const GroupList& old_groups, const GroupList& new_groups, const ProfileMetadata& meta);

/// Exact maximum-weight one-to-one mapping, as (old, new) pairs sorted by old.
std::vector<std::pair<std::size_t, std::size_t>> match_groups(const BipartiteGraph& graph);

inline constexpr std::size_t kNoGroup = static_cast<std::size_t>(-1);

/// Target slot values for one event's row in a new group.
struct SlotWrite {
  std::uint64_t seq_id = 0;
  std::vector<FilterId> slots;  // new shard's slot width

  bool operator==(const SlotWrite&) const = default;
};

/// Shrink-and-expand of one old group into one new group. A rebuilt new
/// group has old_group == kNoGroup; a dropped old group has new_group == kNoGroup.
struct PairPlan {
  std::size_t old_group = kNoGroup;
  std::size_t new_group = kNoGroup;
  std::vector<std::uint64_t> keep;      // E(g) ∩ E(g'), rows reused
  std::vector<SlotWrite> rewrite;       // kept rows whose slot cells change
  std::vector<std::uint64_t> remove;    // E(g) \ E(g')
  std::vector<SlotWrite> insert;        // E(g') \ E(g)
};

struct BehaviorPlan {
  BehaviorId behavior = 0;
  GroupList old_groups;
  GroupList new_groups;
  bool full_rebuild = false;           // shard or cell layout changed
  std::vector<PairPlan> pairs;         // matched, rebuilt and dropped groups
  std::vector<std::size_t> rebuild;    // new groups without a usable old partner
  std::vector<std::size_t> drop;       // old groups without a partner
};

struct UpdatePlan {
  std::uint64_t generation = 0;  // store generation the plan was made against
  std::vector<BehaviorPlan> behaviors;
  std::map<ShardId, std::pair<std::uint16_t, std::uint16_t>> slot_resize;  // old → new slot_count
  std::vector<ShardId> shards_added;
  std::vector<ShardId> shards_removed;

  /// True when executing would change nothing.
  bool empty() const noexcept;
  nlohmann::json to_json() const;
};

/// `meta` must be the profile of `store` under `old_layout`.
UpdatePlan plan_update(const LogStore& store, const StorageLayout& old_layout, const StorageLayout& new_layout,
                       const ProfileMetadata& meta, const Catalog& catalog);

/// Applies the plan in place and leaves the store canonicalized. Throws
/// PlanStale when the store changed after planning.
IOStats execute_plan(const UpdatePlan& plan, LogStore& store, const StorageLayout& old_layout,
                     const StorageLayout& new_layout, const Catalog& catalog);

/// Reconstructs the stored events of a non-sparse log (one per seq_id).
std::vector<BehaviorEvent> events_from_log(const LogStore& store, const StorageLayout& layout, const Catalog& catalog);

/// From-scratch build: every event through the write path, then canonicalized.
LogStore build_log(const std::vector<BehaviorEvent>& events, const Catalog& catalog, const StorageLayout& layout);

/// Full reconstruction of `store` under `new_layout`, with its I/O cost.
std::pair<LogStore, IOStats> rebuild_log(const LogStore& store, const StorageLayout& old_layout,
                                         const StorageLayout& new_layout, const Catalog& catalog);

}  // namespace evlog
