#include "evlog/merge_opt.hpp"

#include <algorithm>
#include <iterator>

#include "evlog/error.hpp"
#include "evlog/matching.hpp"

namespace evlog {

namespace {

std::vector<std::uint64_t> set_union(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t intersection_size(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

// Attribute names in the behavior's canonical order, and their total width.
std::pair<std::vector<std::string>, std::uint64_t> attr_union(BehaviorId behavior, const std::vector<std::string>& a,
                                                              const std::vector<std::string>& b,
                                                              const Catalog& catalog) {
  std::vector<std::string> out;
  std::uint64_t bytes = 0;
  for (const auto& def : catalog.behavior(behavior).attrs) {
    if (std::find(a.begin(), a.end(), def.name) != a.end() || std::find(b.begin(), b.end(), def.name) != b.end()) {
      out.push_back(def.name);
      bytes += def.width_bytes;
    }
  }
  return {std::move(out), bytes};
}

}  // namespace

FeatureGroup make_group(std::vector<FilterId> members, const ProfileMetadata& meta, const Catalog& catalog) {
  if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty feature group");
  std::sort(members.begin(), members.end());
  FeatureGroup g;
  g.behavior = catalog.filter(members.front()).behavior;
  for (auto f : members) {
    if (catalog.filter(f).behavior != g.behavior) throw Error(ErrorCode::InvalidArgument, "group spans behaviors");
    const auto& p = meta.filter(f);
    g.events = set_union(g.events, p.events);
    auto [attrs, bytes] = attr_union(g.behavior, g.attrs, p.attrs, catalog);
    g.attrs = std::move(attrs);
    g.attr_bytes = bytes;
  }
  g.members = std::move(members);
  return g;
}

FeatureGroup merge_groups(const FeatureGroup& a, const FeatureGroup& b, const Catalog& catalog) {
  FeatureGroup g;
  g.behavior = a.behavior;
  g.members = a.members;
  g.members.insert(g.members.end(), b.members.begin(), b.members.end());
  std::sort(g.members.begin(), g.members.end());
  g.events = set_union(a.events, b.events);
  auto [attrs, bytes] = attr_union(a.behavior, a.attrs, b.attrs, catalog);
  g.attrs = std::move(attrs);
  g.attr_bytes = bytes;
  return g;
}

std::uint64_t group_data_size(const FeatureGroup& g) { return g.events.size() * g.attr_bytes; }

std::uint64_t group_index_size(const FeatureGroup& g, std::uint64_t addr_bytes, std::size_t max_group_size) {
  return g.events.size() * addr_bytes * max_group_size;
}

std::int64_t edge_weight(const FeatureGroup& g1, const FeatureGroup& g2, const Catalog& catalog,
                         std::uint64_t addr_bytes) {
  const auto overlap = static_cast<std::int64_t>(intersection_size(g1.events, g2.events));
  const auto united = static_cast<std::int64_t>(g1.events.size() + g2.events.size()) - overlap;
  const auto s12 = static_cast<std::int64_t>(attr_union(g1.behavior, g1.attrs, g2.attrs, catalog).second);
  const auto data = overlap * (static_cast<std::int64_t>(g1.attr_bytes + g2.attr_bytes) - s12);
  const auto n1 = static_cast<std::int64_t>(g1.size());
  const auto n2 = static_cast<std::int64_t>(g2.size());
  const auto e1 = static_cast<std::int64_t>(g1.events.size());
  const auto e2 = static_cast<std::int64_t>(g2.events.size());
  const auto index_growth = (united * (n1 + n2) - (e1 * n1 + e2 * n2)) * static_cast<std::int64_t>(addr_bytes);
  return data - index_growth;
}

std::uint64_t modeled_size(const std::vector<FeatureGroup>& groups, std::uint64_t addr_bytes) {
  std::uint64_t total = 0;
  for (const auto& g : groups) total += group_data_size(g) + group_index_size(g, addr_bytes, g.size());
  return total;
}

MergeResult hierarchical_merge(const ProfileMetadata& meta, const Catalog& catalog, BehaviorId behavior) {
  MergeResult result;
  for (auto f : catalog.filters_of(behavior)) result.groups.push_back(make_group({f}, meta, catalog));
  const auto addr = meta.addr_bytes;

  for (;;) {
    auto& groups = result.groups;
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const auto w = edge_weight(groups[i], groups[j], catalog, addr);
        if (w <= 0) continue;
        // The weight approximates data savings by the overlap alone; only keep
        // edges that also shrink the priced total.
        const auto merged = merge_groups(groups[i], groups[j], catalog);
        if (modeled_size({merged}, addr) >= modeled_size({groups[i], groups[j]}, addr)) continue;
        edges.push_back({i, j, w});
      }
    }
    const auto matching = max_weight_matching(groups.size(), edges);
    if (matching.empty()) break;

    MergeIteration it;
    it.groups_before = groups.size();
    it.merges = matching.size();
    it.size_before = modeled_size(groups, addr);
    std::vector<bool> used(groups.size(), false);
    std::vector<FeatureGroup> next;
    for (auto [a, b] : matching) {
      next.push_back(merge_groups(groups[a], groups[b], catalog));
      used[a] = used[b] = true;
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (!used[i]) next.push_back(std::move(groups[i]));
    }
    std::sort(next.begin(), next.end(),
              [](const FeatureGroup& x, const FeatureGroup& y) { return x.members.front() < y.members.front(); });
    groups = std::move(next);
    it.size_after = modeled_size(groups, addr);
    result.trace.push_back(it);
  }
  return result;
}

std::map<BehaviorId, MergeResult> merge_all(const ProfileMetadata& meta, const Catalog& catalog) {
  std::map<BehaviorId, MergeResult> out;
  for (const auto& b : catalog.behaviors()) {
    if (!catalog.filters_of(b.id).empty()) out.emplace(b.id, hierarchical_merge(meta, catalog, b.id));
  }
  return out;
}

std::size_t MergeConfig::group_index(FilterId filter, BehaviorId behavior) const {
  auto it = groups.find(behavior);
  if (it != groups.end()) {
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const auto& m = it->second[i];
      if (std::find(m.begin(), m.end(), filter) != m.end()) return i;
    }
  }
  throw Error(ErrorCode::ConfigMissingBehavior, "filter " + std::to_string(filter) + " has no group");
}

std::uint16_t MergeConfig::slots_for(ShardId shard) const {
  auto it = slot_count.find(shard);
  if (it == slot_count.end()) throw Error(ErrorCode::UnknownShard, "no slot count for shard " + std::to_string(shard));
  return it->second;
}

MergeConfig build_merge_config(const std::map<BehaviorId, std::vector<std::vector<FilterId>>>& groups,
                               const SplitConfig& split) {
  MergeConfig cfg;
  for (const auto& [sid, widths] : split.column_widths) cfg.slot_count[sid] = 1;
  for (const auto& [bid, list] : groups) {
    auto& out = cfg.groups[bid];
    for (auto members : list) {
      if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty group");
      std::sort(members.begin(), members.end());
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (!cfg.slot_column.emplace(members[i], static_cast<std::uint16_t>(i)).second) {
          throw Error(ErrorCode::InvalidArgument, "filter " + std::to_string(members[i]) + " in two groups");
        }
      }
      auto& sc = cfg.slot_count[split.shard_for(bid)];
      sc = std::max<std::uint16_t>(sc, static_cast<std::uint16_t>(members.size()));
      out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  }
  return cfg;
}

MergeConfig singleton_merge_config(const Catalog& catalog, const SplitConfig& split) {
  std::map<BehaviorId, std::vector<std::vector<FilterId>>> groups;
  for (const auto& [fid, f] : catalog.filters()) groups[f.behavior].push_back({fid});
  return build_merge_config(groups, split);
}

nlohmann::json MergeConfig::to_json() const {
  using nlohmann::json;
  json behaviors = json::object();
  for (const auto& [bid, list] : groups) {
    json arr = json::array();
    for (const auto& members : list) {
      json slots = json::object();
      for (auto f : members) slots[std::to_string(f)] = slot_column.at(f);
      arr.push_back({{"members", members}, {"slots", std::move(slots)}});
    }
    behaviors[std::to_string(bid)] = std::move(arr);
  }
  json counts = json::object();
  for (const auto& [sid, n] : slot_count) counts[std::to_string(sid)] = n;
  return {{"behaviors", std::move(behaviors)}, {"slot_count", std::move(counts)}};
}

MergeConfig MergeConfig::from_json(const nlohmann::json& j) {
  MergeConfig cfg;
  try {
    for (const auto& [key, arr] : j.at("behaviors").items()) {
      auto& out = cfg.groups[static_cast<BehaviorId>(std::stoul(key))];
      for (const auto& g : arr) {
        out.push_back(g.at("members").get<std::vector<FilterId>>());
        for (const auto& [f, col] : g.at("slots").items()) {
          cfg.slot_column[static_cast<FilterId>(std::stoul(f))] = col.get<std::uint16_t>();
        }
      }
    }
    for (const auto& [key, n] : j.at("slot_count").items()) {
      cfg.slot_count[static_cast<ShardId>(std::stoul(key))] = n.get<std::uint16_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("merge config json: ") + e.what());
  }
  return cfg;
}

}  // namespace evlog
