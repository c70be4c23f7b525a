#include "evlog/layout.hpp"

#include <algorithm>
#include <memory>

#include "evlog/error.hpp"

namespace evlog {

std::string_view to_string(LayoutKind kind) noexcept {
  switch (kind) {
    case LayoutKind::unified: return "unified";
    case LayoutKind::vhan: return "vhan";
    case LayoutKind::physical: return "physical";
  }
  return "?";
}

LayoutKind parse_layout_kind(std::string_view text) {
  if (text == "unified") return LayoutKind::unified;
  if (text == "vhan") return LayoutKind::vhan;
  if (text == "physical") return LayoutKind::physical;
  throw Error(ErrorCode::InvalidArgument, "unknown layout kind '" + std::string(text) + "'");
}

StorageLayout::StorageLayout(LayoutKind kind, SplitConfig split, AttributeMapping mapping, MergeConfig merge)
    : kind_(kind), split_(std::move(split)), mapping_(std::move(mapping)), merge_(std::move(merge)) {}

StorageLayout StorageLayout::unified(const Catalog& catalog) {
  auto [split, mapping] = build_unified_split(catalog);
  auto merge = singleton_merge_config(catalog, split);
  return {LayoutKind::unified, std::move(split), std::move(mapping), std::move(merge)};
}

StorageLayout StorageLayout::optimized(const Catalog& catalog,
                                       const std::map<BehaviorId, std::vector<std::vector<FilterId>>>& groups,
                                       bool vhan) {
  auto [split, mapping] = vhan ? build_split_config(catalog) : build_physical_split(catalog);
  auto all = groups;
  // Filters the caller left out stay alone.
  for (const auto& [fid, f] : catalog.filters()) {
    auto& list = all[f.behavior];
    const bool placed = std::any_of(list.begin(), list.end(), [fid = fid](const auto& m) {
      return std::find(m.begin(), m.end(), fid) != m.end();
    });
    if (!placed) list.push_back({fid});
  }
  auto merge = build_merge_config(all, split);
  return {vhan ? LayoutKind::vhan : LayoutKind::physical, std::move(split), std::move(mapping), std::move(merge)};
}

StorageLayout StorageLayout::initial(const Catalog& catalog, bool vhan) { return optimized(catalog, {}, vhan); }

SlotLocation StorageLayout::locate(FilterId filter, const Catalog& catalog) const {
  const auto& f = catalog.filter(filter);
  auto col = merge_.slot_column.find(filter);
  if (col == merge_.slot_column.end()) {
    throw Error(ErrorCode::ConfigMissingBehavior, "filter " + std::to_string(filter) + " not in the merge config");
  }
  return {split_.shard_for(f.behavior), col->second};
}

LogStore StorageLayout::make_store() const {
  LogStore store;
  for (const auto& [sid, widths] : split_.column_widths) store.create_shard(sid, widths, slot_count(sid));
  return store;
}

CellKindResolver StorageLayout::resolver(const Catalog& catalog) const {
  using Kinds = std::vector<std::optional<AttrKind>>;
  auto by_behavior = std::make_shared<std::map<BehaviorId, Kinds>>();
  auto by_filter = std::make_shared<std::map<FilterId, Kinds>>();
  for (const auto& b : catalog.behaviors()) {
    if (!mapping_.covers(b.id)) continue;
    const auto& cols = mapping_.columns.at(b.id);
    Kinds kinds(split_.column_widths.at(split_.shard_for(b.id)).size());
    for (std::size_t i = 0; i < b.attrs.size(); ++i) kinds[cols[i]] = b.attrs[i].kind;
    (*by_behavior)[b.id] = std::move(kinds);
  }
  const bool sparse = sparse_cells();
  if (sparse) {
    for (const auto& [fid, f] : catalog.filters()) {
      const auto& b = catalog.behavior(f.behavior);
      const auto& cols = mapping_.columns.at(b.id);
      Kinds kinds(split_.column_widths.at(split_.shard_for(b.id)).size());
      for (std::size_t i = 0; i < b.attrs.size(); ++i) {
        const auto& req = f.required_attrs;
        if (std::find(req.begin(), req.end(), b.attrs[i].name) != req.end()) kinds[cols[i]] = b.attrs[i].kind;
      }
      (*by_filter)[fid] = std::move(kinds);
    }
  }
  return [by_behavior, by_filter, sparse](BehaviorId behavior, std::size_t column,
                                          std::span<const FilterId> slots) -> std::optional<AttrKind> {
    const Kinds* kinds = nullptr;
    if (sparse) {
      auto it = slots.empty() ? by_filter->end() : by_filter->find(slots[0]);
      if (it == by_filter->end()) throw Error(ErrorCode::CorruptFile, "row names an unknown filter");
      kinds = &it->second;
    } else {
      auto it = by_behavior->find(behavior);
      if (it == by_behavior->end()) throw Error(ErrorCode::CorruptFile, "row names an unknown behavior");
      kinds = &it->second;
    }
    if (column >= kinds->size()) throw Error(ErrorCode::CorruptFile, "column outside the layout");
    return (*kinds)[column];
  };
}

nlohmann::json StorageLayout::to_json(const Catalog& catalog) const {
  return {{"kind", std::string(evlog::to_string(kind_))},
          {"mapping", evlog::to_json(split_, mapping_, catalog)},
          {"merge", merge_.to_json()}};
}

StorageLayout StorageLayout::from_json(const nlohmann::json& j, const Catalog& catalog) {
  try {
    auto [split, mapping] = split_from_json(j.at("mapping"), catalog);
    return {parse_layout_kind(j.at("kind").get<std::string>()), std::move(split), std::move(mapping),
            MergeConfig::from_json(j.at("merge"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("layout json: ") + e.what());
  }
}

}  // namespace evlog
