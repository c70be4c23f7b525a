#include "evlog/profiler.hpp"

#include <algorithm>

#include "evlog/error.hpp"

namespace evlog {

const FilterProfile& ProfileMetadata::filter(FilterId id) const {
  auto it = filters.find(id);
  if (it == filters.end()) throw Error(ErrorCode::UnknownFilter, "filter " + std::to_string(id) + " not profiled");
  return it->second;
}

nlohmann::json ProfileMetadata::to_json() const {
  using nlohmann::json;
  json fs = json::object();
  for (const auto& [fid, p] : filters) {
    fs[std::to_string(fid)] = {{"events", p.events}, {"attrs", p.attrs}, {"attr_bytes", p.attr_bytes}};
  }
  json bs = json::object();
  for (const auto& [bid, list] : behaviors) bs[std::to_string(bid)] = list;
  return {{"filters", std::move(fs)},
          {"behaviors", std::move(bs)},
          {"addr_bytes", addr_bytes},
          {"shard_overhead", shard_overhead}};
}

ProfileMetadata ProfileMetadata::from_json(const nlohmann::json& j) {
  ProfileMetadata m;
  try {
    for (const auto& [key, p] : j.at("filters").items()) {
      auto& out = m.filters[static_cast<FilterId>(std::stoul(key))];
      out.events = p.at("events").get<std::vector<std::uint64_t>>();
      out.attrs = p.at("attrs").get<std::vector<std::string>>();
      out.attr_bytes = p.at("attr_bytes").get<std::uint64_t>();
    }
    for (const auto& [key, list] : j.at("behaviors").items()) {
      m.behaviors[static_cast<BehaviorId>(std::stoul(key))] = list.get<std::vector<FilterId>>();
    }
    m.addr_bytes = j.at("addr_bytes").get<std::uint64_t>();
    m.shard_overhead = j.at("shard_overhead").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("profile json: ") + e.what());
  }
  return m;
}

ProfileMetadata empty_profile(const Catalog& catalog) {
  ProfileMetadata m;
  for (const auto& [fid, f] : catalog.filters()) {
    auto& p = m.filters[fid];
    for (const auto& a : catalog.behavior(f.behavior).attrs) {
      const auto& req = f.required_attrs;
      if (std::find(req.begin(), req.end(), a.name) == req.end()) continue;
      p.attrs.push_back(a.name);
      p.attr_bytes += a.width_bytes;
    }
    m.behaviors[f.behavior].push_back(fid);
  }
  return m;
}

ProfileMetadata profile(const LogStore& store, const StorageLayout& layout, const Catalog& catalog) {
  auto meta = empty_profile(catalog);
  for (auto& [fid, p] : meta.filters) {
    const auto loc = layout.locate(fid, catalog);
    if (!store.has_shard(loc.shard)) continue;
    const auto& shard = store.shard(loc.shard);
    meta.addr_bytes = shard.addr_bytes();
    if (loc.column >= shard.slot_count()) throw Error(ErrorCode::CorruptIndex, "shard lacks the filter's slot column");
    const auto& idx = shard.index(loc.column);
    auto it = idx.find(fid);
    if (it == idx.end()) continue;
    p.events.reserve(it->second.size());
    for (auto addr : it->second) {
      const auto& row = shard.row(shard.position_of(addr));
      if (row.slots[loc.column] != fid) throw Error(ErrorCode::CorruptIndex, "index entry points at another filter's row");
      p.events.push_back(row.seq_id);
    }
    std::sort(p.events.begin(), p.events.end());
    p.events.erase(std::unique(p.events.begin(), p.events.end()), p.events.end());
  }
  return meta;
}

}  // namespace evlog
