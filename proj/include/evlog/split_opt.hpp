#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/logstore.hpp"

namespace evlog {

/// Per behavior: each physical attribute (canonical order) → storage column.
/// Under virtual naming the columns are exactly 0..k-1.
struct AttributeMapping {
  std::map<BehaviorId, std::vector<std::uint16_t>> columns;

  std::uint16_t column_of(BehaviorId behavior, std::size_t attr_index) const;
  bool covers(BehaviorId behavior) const noexcept { return columns.count(behavior) != 0; }

  bool operator==(const AttributeMapping&) const = default;
};

struct SplitConfig {
  std::map<BehaviorId, ShardId> shard_of;
  /// Cell width per storage column, per shard.
  std::map<ShardId, std::vector<std::uint16_t>> column_widths;
  /// Column names for layouts that keep physical names (empty under VHAN).
  std::map<ShardId, std::vector<std::string>> column_names;

  ShardId shard_for(BehaviorId behavior) const;

  bool operator==(const SplitConfig&) const = default;
};

/// Virtual naming: one shard per distinct attribute count k; attribute i of a
/// behavior lands in column i; a column's width is the widest attribute
/// mapped to it within the shard.
std::pair<SplitConfig, AttributeMapping> build_split_config(const Catalog& catalog);

/// Same shards, but each shard's columns are the union of its behaviors'
/// physical attribute names (sorted), so heterogeneous behaviors leave nulls.
std::pair<SplitConfig, AttributeMapping> build_physical_split(const Catalog& catalog);

/// The single unified file: columns are every distinct attribute name in the
/// catalog. Shard id is the column count.
std::pair<SplitConfig, AttributeMapping> build_unified_split(const Catalog& catalog);

/// Named values (canonical order of the behavior) → cells ordered by column.
/// `cell_count` is the shard's column count; unmapped columns stay null.
std::vector<Value> virtualize(const std::map<std::string, Value>& values, BehaviorId behavior,
                              const Catalog& catalog, const AttributeMapping& mapping, std::size_t cell_count);

/// Inverse of `virtualize`: every attribute of the behavior, by name.
std::map<std::string, Value> devirtualize(std::span<const Value> cells, BehaviorId behavior, const Catalog& catalog,
                                          const AttributeMapping& mapping);

nlohmann::json to_json(const SplitConfig& split, const AttributeMapping& mapping, const Catalog& catalog);
std::pair<SplitConfig, AttributeMapping> split_from_json(const nlohmann::json& j, const Catalog& catalog);

}  // namespace evlog
