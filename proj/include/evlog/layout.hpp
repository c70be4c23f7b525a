#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/logstore.hpp"
#include "evlog/merge_opt.hpp"
#include "evlog/split_opt.hpp"

namespace evlog {

enum class LayoutKind : std::uint8_t {
  unified,   // one file, every attribute name a column, one row per matched filter
  vhan,      // shards by attribute count, virtual columns, merged rows
  physical,  // shards by attribute count, physical-name columns, merged rows
};

std::string_view to_string(LayoutKind kind) noexcept;
LayoutKind parse_layout_kind(std::string_view text);

/// Where a filter's rows live.
struct SlotLocation {
  ShardId shard = 0;
  std::uint16_t column = 0;
};

/// Everything needed to write, read and decode one log.
class StorageLayout {
 public:
  StorageLayout() = default;
  StorageLayout(LayoutKind kind, SplitConfig split, AttributeMapping mapping, MergeConfig merge);

  /// Baseline: unified file, singleton groups.
  static StorageLayout unified(const Catalog& catalog);
  /// Merged rows under virtual naming (or physical names when `vhan` is false).
  static StorageLayout optimized(const Catalog& catalog,
                                 const std::map<BehaviorId, std::vector<std::vector<FilterId>>>& groups,
                                 bool vhan = true);
  /// Optimized layout before any profiling: every filter alone.
  static StorageLayout initial(const Catalog& catalog, bool vhan = true);

  LayoutKind kind() const noexcept { return kind_; }
  const SplitConfig& split() const noexcept { return split_; }
  const AttributeMapping& mapping() const noexcept { return mapping_; }
  const MergeConfig& merge() const noexcept { return merge_; }

  /// True when a row only carries the attributes its filters require.
  bool sparse_cells() const noexcept { return kind_ == LayoutKind::unified; }
  bool operator==(const StorageLayout&) const = default;

  SlotLocation locate(FilterId filter, const Catalog& catalog) const;
  std::uint16_t slot_count(ShardId shard) const { return merge_.slots_for(shard); }

  /// A store holding an empty shard for every shard of the split.
  LogStore make_store() const;

  CellKindResolver resolver(const Catalog& catalog) const;

  nlohmann::json to_json(const Catalog& catalog) const;
  static StorageLayout from_json(const nlohmann::json& j, const Catalog& catalog);

 private:
  LayoutKind kind_ = LayoutKind::vhan;
  SplitConfig split_;
  AttributeMapping mapping_;
  MergeConfig merge_;
};

}  // namespace evlog
