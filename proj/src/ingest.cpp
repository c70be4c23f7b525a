#include "evlog/ingest.hpp"

#include <algorithm>
#include <fstream>

#include "evlog/error.hpp"

namespace evlog {

void validate_event(const BehaviorEvent& event, const Catalog& catalog) {
  if (event.behavior >= catalog.behaviors().size()) {
    throw Error(ErrorCode::UnknownBehavior, "behavior " + std::to_string(event.behavior));
  }
  const auto& b = catalog.behavior(event.behavior);
  for (const auto& a : b.attrs) {
    auto it = event.values.find(a.name);
    if (it == event.values.end()) throw Error(ErrorCode::MissingAttribute, "'" + a.name + "' of " + b.name);
    if (is_null(it->second) || kind_of(it->second) != a.kind) {
      throw Error(ErrorCode::TypeMismatch, "'" + a.name + "' expects " + std::string(to_string(a.kind)));
    }
  }
  for (const auto& [name, v] : event.values) {
    if (!catalog.attr_index(event.behavior, name)) throw Error(ErrorCode::UnknownAttribute, "'" + name + "'");
  }
}

std::vector<FilterMatch> match_filters(const BehaviorEvent& event, const Catalog& catalog) {
  if (event.behavior >= catalog.behaviors().size()) {
    throw Error(ErrorCode::UnknownBehavior, "behavior " + std::to_string(event.behavior));
  }
  std::vector<FilterMatch> out;
  for (auto fid : catalog.filters_of(event.behavior)) {
    const auto& f = catalog.filter(fid);
    const bool hit = std::all_of(f.predicates.begin(), f.predicates.end(), [&](const Predicate& p) {
      auto it = event.values.find(p.attr);
      return it != event.values.end() && it->second == p.value;
    });
    if (hit) out.push_back({fid, f.required_attrs});
  }
  return out;
}

std::vector<EventRow> rows_for_event(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout) {
  const auto matches = match_filters(event, catalog);
  std::vector<EventRow> rows;
  if (matches.empty()) return rows;
  const auto& split = layout.split();
  const auto& mapping = layout.mapping();
  const auto shard = split.shard_for(event.behavior);
  const auto cell_count = split.column_widths.at(shard).size();
  const auto slots = layout.slot_count(shard);

  if (layout.sparse_cells()) {
    const auto& b = catalog.behavior(event.behavior);
    for (const auto& m : matches) {
      EventRow r{event.seq_id, event.behavior, event.timestamp_ms, std::vector<Value>(cell_count),
                 std::vector<FilterId>(slots, kNullFilter)};
      for (std::size_t i = 0; i < b.attrs.size(); ++i) {
        if (std::find(m.required.begin(), m.required.end(), b.attrs[i].name) == m.required.end()) continue;
        auto it = event.values.find(b.attrs[i].name);
        if (it == event.values.end()) throw Error(ErrorCode::MissingAttribute, "'" + b.attrs[i].name + "'");
        r.cells[mapping.column_of(event.behavior, i)] = it->second;
      }
      r.slots[layout.merge().slot_column.at(m.filter)] = m.filter;
      rows.push_back(std::move(r));
    }
    return rows;
  }

  auto groups = layout.merge().groups.find(event.behavior);
  if (groups == layout.merge().groups.end()) {
    throw Error(ErrorCode::ConfigMissingBehavior, "behavior " + std::to_string(event.behavior));
  }
  const auto cells = virtualize(event.values, event.behavior, catalog, mapping, cell_count);
  std::vector<FilterId> hit;
  for (const auto& m : matches) hit.push_back(m.filter);
  for (const auto& members : groups->second) {
    std::vector<FilterId> slot_values(slots, kNullFilter);
    bool any = false;
    for (auto f : members) {
      if (std::binary_search(hit.begin(), hit.end(), f)) {
        slot_values[layout.merge().slot_column.at(f)] = f;
        any = true;
      }
    }
    if (any) rows.push_back({event.seq_id, event.behavior, event.timestamp_ms, cells, std::move(slot_values)});
  }
  return rows;
}

namespace {

std::size_t append_all(std::vector<EventRow> rows, LogStore& store, ShardId shard) {
  auto& s = store.shard(shard);
  for (auto& r : rows) s.append_row(std::move(r));
  return rows.size();
}

}  // namespace

std::size_t write_event_baseline(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                                 LogStore& store) {
  if (layout.kind() != LayoutKind::unified) throw Error(ErrorCode::InvalidArgument, "baseline needs the unified layout");
  return append_all(rows_for_event(event, catalog, layout), store, layout.split().shard_for(event.behavior));
}

std::size_t write_event_optimized(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                                  LogStore& store) {
  if (layout.kind() == LayoutKind::unified) throw Error(ErrorCode::InvalidArgument, "optimized write on unified layout");
  if (!layout.split().shard_of.count(event.behavior)) {
    throw Error(ErrorCode::ConfigMissingBehavior, "behavior " + std::to_string(event.behavior));
  }
  return append_all(rows_for_event(event, catalog, layout), store, layout.split().shard_for(event.behavior));
}

std::size_t write_event(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                        LogStore& store) {
  return layout.kind() == LayoutKind::unified ? write_event_baseline(event, catalog, layout, store)
                                              : write_event_optimized(event, catalog, layout, store);
}

nlohmann::json event_to_json(const BehaviorEvent& event) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [name, v] : event.values) values[name] = value_to_json(v);
  return {{"seq", event.seq_id}, {"behavior", event.behavior}, {"ts", event.timestamp_ms}, {"values", values}};
}

BehaviorEvent event_from_json(const nlohmann::json& j, const Catalog& catalog) {
  BehaviorEvent e;
  try {
    e.seq_id = j.at("seq").get<std::uint64_t>();
    e.behavior = j.at("behavior").get<BehaviorId>();
    e.timestamp_ms = j.at("ts").get<std::int64_t>();
    if (e.behavior >= catalog.behaviors().size()) {
      throw Error(ErrorCode::UnknownBehavior, "behavior " + std::to_string(e.behavior));
    }
    for (const auto& [name, v] : j.at("values").items()) {
      e.values[name] = value_from_json(v, catalog.attr(e.behavior, name).kind);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidValue, std::string("event json: ") + ex.what());
  }
  validate_event(e, catalog);
  return e;
}

void write_events(const std::filesystem::path& path, const std::vector<BehaviorEvent>& events, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& e : events) out << event_to_json(e).dump() << '\n';
}

std::vector<BehaviorEvent> read_events(const std::filesystem::path& path, const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<BehaviorEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidValue, std::string("event line: ") + ex.what());
    }
    auto e = event_from_json(j, catalog);
    if (!out.empty() && (e.seq_id <= out.back().seq_id || e.timestamp_ms < out.back().timestamp_ms)) {
      throw Error(ErrorCode::InvalidArgument, "events out of order at seq " + std::to_string(e.seq_id));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace evlog
