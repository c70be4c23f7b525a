#include "evlog/split_opt.hpp"

#include <algorithm>
#include <set>

#include "evlog/error.hpp"

namespace evlog {

std::uint16_t AttributeMapping::column_of(BehaviorId behavior, std::size_t attr_index) const {
  auto it = columns.find(behavior);
  if (it == columns.end()) throw Error(ErrorCode::ConfigMissingBehavior, "no mapping for behavior " + std::to_string(behavior));
  if (attr_index >= it->second.size()) throw Error(ErrorCode::UnknownAttribute, "attribute index out of range");
  return it->second[attr_index];
}

ShardId SplitConfig::shard_for(BehaviorId behavior) const {
  auto it = shard_of.find(behavior);
  if (it == shard_of.end()) throw Error(ErrorCode::ConfigMissingBehavior, "no shard for behavior " + std::to_string(behavior));
  return it->second;
}

std::pair<SplitConfig, AttributeMapping> build_split_config(const Catalog& catalog) {
  SplitConfig split;
  AttributeMapping mapping;
  for (const auto& b : catalog.behaviors()) {
    const auto k = static_cast<ShardId>(b.attrs.size());
    split.shard_of[b.id] = k;
    auto& widths = split.column_widths[k];
    widths.resize(k, 0);
    auto& cols = mapping.columns[b.id];
    for (std::size_t i = 0; i < b.attrs.size(); ++i) {
      cols.push_back(static_cast<std::uint16_t>(i));
      widths[i] = std::max(widths[i], b.attrs[i].width_bytes);
    }
  }
  return {std::move(split), std::move(mapping)};
}

namespace {

// Shared by the physical-name layouts: `group_of` picks the shard per behavior.
template <typename GroupOf>
std::pair<SplitConfig, AttributeMapping> build_named(const Catalog& catalog, GroupOf group_of) {
  SplitConfig split;
  AttributeMapping mapping;
  std::map<ShardId, std::map<std::string, std::uint16_t>> widest;
  for (const auto& b : catalog.behaviors()) {
    const ShardId shard = group_of(b);
    split.shard_of[b.id] = shard;
    auto& names = widest[shard];
    for (const auto& a : b.attrs) {
      auto& w = names[a.name];
      w = std::max(w, a.width_bytes);
    }
  }
  for (const auto& [shard, names] : widest) {
    auto& cols = split.column_names[shard];
    auto& widths = split.column_widths[shard];
    for (const auto& [name, w] : names) {
      cols.push_back(name);
      widths.push_back(w);
    }
  }
  for (const auto& b : catalog.behaviors()) {
    const auto& cols = split.column_names[split.shard_of[b.id]];
    auto& out = mapping.columns[b.id];
    for (const auto& a : b.attrs) {
      out.push_back(static_cast<std::uint16_t>(std::lower_bound(cols.begin(), cols.end(), a.name) - cols.begin()));
    }
  }
  return {std::move(split), std::move(mapping)};
}

}  // namespace

std::pair<SplitConfig, AttributeMapping> build_physical_split(const Catalog& catalog) {
  return build_named(catalog, [](const BehaviorType& b) { return static_cast<ShardId>(b.attrs.size()); });
}

std::pair<SplitConfig, AttributeMapping> build_unified_split(const Catalog& catalog) {
  std::set<std::string> names;
  for (const auto& b : catalog.behaviors()) {
    for (const auto& a : b.attrs) names.insert(a.name);
  }
  const auto id = static_cast<ShardId>(names.size());
  return build_named(catalog, [id](const BehaviorType&) { return id; });
}

std::vector<Value> virtualize(const std::map<std::string, Value>& values, BehaviorId behavior,
                              const Catalog& catalog, const AttributeMapping& mapping, std::size_t cell_count) {
  const auto& b = catalog.behavior(behavior);
  auto it = mapping.columns.find(behavior);
  if (it == mapping.columns.end()) {
    throw Error(ErrorCode::ConfigMissingBehavior, "no mapping for behavior " + std::to_string(behavior));
  }
  std::vector<Value> cells(cell_count);
  for (std::size_t i = 0; i < b.attrs.size(); ++i) {
    auto v = values.find(b.attrs[i].name);
    if (v == values.end()) throw Error(ErrorCode::MissingAttribute, "'" + b.attrs[i].name + "' of " + b.name);
    const auto col = it->second[i];
    if (col >= cell_count) throw Error(ErrorCode::CellCountMismatch, "mapping column beyond shard width");
    cells[col] = v->second;
  }
  return cells;
}

std::map<std::string, Value> devirtualize(std::span<const Value> cells, BehaviorId behavior, const Catalog& catalog,
                                          const AttributeMapping& mapping) {
  auto it = mapping.columns.find(behavior);
  if (it == mapping.columns.end() || behavior >= catalog.behaviors().size()) {
    throw Error(ErrorCode::UnknownBehavior, "behavior " + std::to_string(behavior) + " is not mapped");
  }
  const auto& b = catalog.behavior(behavior);
  std::map<std::string, Value> out;
  for (std::size_t i = 0; i < b.attrs.size(); ++i) {
    const auto col = it->second[i];
    if (col >= cells.size()) throw Error(ErrorCode::CellCountMismatch, "row narrower than mapping");
    out.emplace(b.attrs[i].name, cells[col]);
  }
  return out;
}

nlohmann::json to_json(const SplitConfig& split, const AttributeMapping& mapping, const Catalog& catalog) {
  using nlohmann::json;
  json behaviors = json::object();
  for (const auto& [bid, shard] : split.shard_of) {
    const auto& b = catalog.behavior(bid);
    json cols = json::object();
    const auto& mcols = mapping.columns.at(bid);
    for (std::size_t i = 0; i < b.attrs.size(); ++i) cols[b.attrs[i].name] = mcols[i];
    behaviors[std::to_string(bid)] = {{"shard", shard}, {"columns", std::move(cols)}};
  }
  json shards = json::object();
  for (const auto& [sid, widths] : split.column_widths) {
    json s = {{"widths", widths}};
    if (auto it = split.column_names.find(sid); it != split.column_names.end()) s["names"] = it->second;
    shards[std::to_string(sid)] = std::move(s);
  }
  return {{"behaviors", std::move(behaviors)}, {"shards", std::move(shards)}};
}

std::pair<SplitConfig, AttributeMapping> split_from_json(const nlohmann::json& j, const Catalog& catalog) {
  SplitConfig split;
  AttributeMapping mapping;
  try {
    for (const auto& [key, jb] : j.at("behaviors").items()) {
      const auto bid = static_cast<BehaviorId>(std::stoul(key));
      const auto& b = catalog.behavior(bid);
      split.shard_of[bid] = jb.at("shard").get<ShardId>();
      auto& cols = mapping.columns[bid];
      for (const auto& a : b.attrs) cols.push_back(jb.at("columns").at(a.name).get<std::uint16_t>());
    }
    for (const auto& [key, js] : j.at("shards").items()) {
      const auto sid = static_cast<ShardId>(std::stoul(key));
      split.column_widths[sid] = js.at("widths").get<std::vector<std::uint16_t>>();
      if (js.contains("names")) split.column_names[sid] = js.at("names").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("mapping json: ") + e.what());
  }
  return {std::move(split), std::move(mapping)};
}

}  // namespace evlog
