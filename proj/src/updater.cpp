#include "evlog/updater.hpp"

#include <algorithm>
#include <iterator>
#include <set>

#include "evlog/error.hpp"
#include "evlog/matching.hpp"
#include "evlog/split_opt.hpp"

namespace evlog {

IOStats& IOStats::operator+=(const IOStats& o) noexcept {
  rows_read += o.rows_read;
  rows_written += o.rows_written;
  rows_deleted += o.rows_deleted;
  cells_rewritten += o.cells_rewritten;
  rows_modified += o.rows_modified;
  rows_resized += o.rows_resized;
  return *this;
}

nlohmann::json IOStats::to_json() const {
  return {{"rows_read", rows_read},         {"rows_written", rows_written},   {"rows_deleted", rows_deleted},
          {"cells_rewritten", cells_rewritten}, {"rows_modified", rows_modified}, {"rows_resized", rows_resized},
          {"row_ops", row_ops()}};
}

std::vector<std::uint64_t> group_events(const std::vector<FilterId>& members, const ProfileMetadata& meta) {
  std::vector<std::uint64_t> out;
  for (auto f : members) {
    const auto& e = meta.filter(f).events;
    std::vector<std::uint64_t> merged;
    merged.reserve(out.size() + e.size());
    std::set_union(out.begin(), out.end(), e.begin(), e.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

namespace {

std::vector<std::uint64_t> intersect(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::uint64_t> subtract(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains(const std::vector<std::uint64_t>& sorted, std::uint64_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

// Slot values a group's row carries for one event.
std::vector<FilterId> slots_for(std::uint64_t seq, const std::vector<FilterId>& members, const ProfileMetadata& meta,
                                const MergeConfig& merge, std::uint16_t width) {
  std::vector<FilterId> slots(width, kNullFilter);
  for (auto f : members) {
    if (contains(meta.filter(f).events, seq)) slots.at(merge.slot_column.at(f)) = f;
  }
  return slots;
}

const GroupList& groups_of(const StorageLayout& layout, BehaviorId b) {
  static const GroupList none;
  auto it = layout.merge().groups.find(b);
  return it == layout.merge().groups.end() ? none : it->second;
}

FilterId min_slot(const std::vector<FilterId>& slots) {
  FilterId m = kNullFilter;
  for (auto s : slots) {
    if (s != kNullFilter && (m == kNullFilter || s < m)) m = s;
  }
  return m;
}

}  // namespace

BipartiteGraph build_bipartite(const GroupList& old_groups, const GroupList& new_groups, const ProfileMetadata& meta) {
  BipartiteGraph g;
  g.old_count = old_groups.size();
  g.new_count = new_groups.size();
  std::vector<std::vector<std::uint64_t>> old_events, new_events;
  for (const auto& m : old_groups) old_events.push_back(group_events(m, meta));
  for (const auto& m : new_groups) new_events.push_back(group_events(m, meta));
  for (std::size_t i = 0; i < old_groups.size(); ++i) {
    for (std::size_t j = 0; j < new_groups.size(); ++j) {
      const auto w = intersect(old_events[i], new_events[j]).size();
      if (w > 0) g.edges.push_back({i, j, w});
    }
  }
  return g;
}

std::vector<std::pair<std::size_t, std::size_t>> match_groups(const BipartiteGraph& graph) {
  std::vector<WeightedEdge> edges;
  edges.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    edges.push_back({e.old_group, graph.old_count + e.new_group, static_cast<std::int64_t>(e.weight)});
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto [a, b] : max_weight_matching(graph.old_count + graph.new_count, edges)) {
    out.emplace_back(a, b - graph.old_count);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool UpdatePlan::empty() const noexcept {
  return behaviors.empty() && slot_resize.empty() && shards_added.empty() && shards_removed.empty();
}

nlohmann::json UpdatePlan::to_json() const {
  using nlohmann::json;
  json bs = json::array();
  for (const auto& bp : behaviors) {
    json pairs = json::array();
    for (const auto& p : bp.pairs) {
      pairs.push_back({{"old", p.old_group == kNoGroup ? json(nullptr) : json(p.old_group)},
                       {"new", p.new_group == kNoGroup ? json(nullptr) : json(p.new_group)},
                       {"keep", p.keep.size()},
                       {"rewrite", p.rewrite.size()},
                       {"remove", p.remove.size()},
                       {"insert", p.insert.size()}});
    }
    bs.push_back({{"behavior", bp.behavior},
                  {"old_groups", bp.old_groups},
                  {"new_groups", bp.new_groups},
                  {"full_rebuild", bp.full_rebuild},
                  {"rebuild", bp.rebuild},
                  {"drop", bp.drop},
                  {"pairs", std::move(pairs)}});
  }
  json resize = json::object();
  for (const auto& [sid, r] : slot_resize) resize[std::to_string(sid)] = {r.first, r.second};
  return {{"generation", generation},
          {"behaviors", std::move(bs)},
          {"slot_resize", std::move(resize)},
          {"shards_added", shards_added},
          {"shards_removed", shards_removed}};
}

UpdatePlan plan_update(const LogStore& store, const StorageLayout& old_layout, const StorageLayout& new_layout,
                       const ProfileMetadata& meta, const Catalog& catalog) {
  if (old_layout.sparse_cells() || new_layout.sparse_cells()) {
    throw Error(ErrorCode::InvalidArgument, "incremental update needs merged layouts on both sides");
  }
  UpdatePlan plan;
  plan.generation = store.generation();
  const auto& old_split = old_layout.split();
  const auto& new_split = new_layout.split();
  const bool kind_changed = old_layout.kind() != new_layout.kind();

  for (const auto& [sid, widths] : new_split.column_widths) {
    auto it = old_split.column_widths.find(sid);
    if (it == old_split.column_widths.end() || it->second != widths) {
      plan.shards_added.push_back(sid);
    } else if (old_layout.slot_count(sid) != new_layout.slot_count(sid)) {
      plan.slot_resize[sid] = {old_layout.slot_count(sid), new_layout.slot_count(sid)};
    }
  }
  for (const auto& [sid, widths] : old_split.column_widths) {
    auto it = new_split.column_widths.find(sid);
    if (it == new_split.column_widths.end() || it->second != widths) plan.shards_removed.push_back(sid);
  }
  auto rewritten = [&](ShardId sid) {
    return std::find(plan.shards_added.begin(), plan.shards_added.end(), sid) != plan.shards_added.end();
  };

  for (const auto& b : catalog.behaviors()) {
    const auto& old_groups = groups_of(old_layout, b.id);
    const auto& new_groups = groups_of(new_layout, b.id);
    const auto old_shard = old_split.shard_for(b.id);
    const auto new_shard = new_split.shard_for(b.id);
    const bool moved = kind_changed || old_shard != new_shard || rewritten(new_shard) ||
                       old_layout.mapping().columns.at(b.id) != new_layout.mapping().columns.at(b.id);
    if (!moved && old_groups == new_groups) continue;

    BehaviorPlan bp;
    bp.behavior = b.id;
    bp.old_groups = old_groups;
    bp.new_groups = new_groups;
    if (moved) {
      bp.full_rebuild = true;
      plan.behaviors.push_back(std::move(bp));
      continue;
    }

    const auto width = new_layout.slot_count(new_shard);
    const auto matched = match_groups(build_bipartite(old_groups, new_groups, meta));
    std::vector<bool> old_used(old_groups.size(), false), new_used(new_groups.size(), false);
    for (auto [o, n] : matched) {
      old_used[o] = new_used[n] = true;
      const auto e_old = group_events(old_groups[o], meta);
      const auto e_new = group_events(new_groups[n], meta);
      PairPlan p;
      p.old_group = o;
      p.new_group = n;
      p.keep = intersect(e_old, e_new);
      p.remove = subtract(e_old, e_new);
      for (auto seq : subtract(e_new, e_old)) {
        p.insert.push_back({seq, slots_for(seq, new_groups[n], meta, new_layout.merge(), width)});
      }
      const auto old_width = old_layout.slot_count(old_shard);
      for (auto seq : p.keep) {
        auto before = slots_for(seq, old_groups[o], meta, old_layout.merge(), old_width);
        auto after = slots_for(seq, new_groups[n], meta, new_layout.merge(), width);
        auto padded = after;
        const auto common = std::max<std::size_t>(old_width, width);
        before.resize(common, kNullFilter);
        padded.resize(common, kNullFilter);
        if (before != padded) p.rewrite.push_back({seq, std::move(after)});
      }
      bp.pairs.push_back(std::move(p));
    }
    for (std::size_t n = 0; n < new_groups.size(); ++n) {
      if (new_used[n]) continue;
      bp.rebuild.push_back(n);
      PairPlan p;
      p.new_group = n;
      for (auto seq : group_events(new_groups[n], meta)) {
        p.insert.push_back({seq, slots_for(seq, new_groups[n], meta, new_layout.merge(), width)});
      }
      bp.pairs.push_back(std::move(p));
    }
    for (std::size_t o = 0; o < old_groups.size(); ++o) {
      if (old_used[o]) continue;
      bp.drop.push_back(o);
      PairPlan p;
      p.old_group = o;
      p.remove = group_events(old_groups[o], meta);
      bp.pairs.push_back(std::move(p));
    }
    plan.behaviors.push_back(std::move(bp));
  }
  return plan;
}

namespace {

// Where each old row lives: (behavior, old group, seq) → position.
struct RowKey {
  BehaviorId behavior;
  std::size_t group;
  std::uint64_t seq;
  auto operator<=>(const RowKey&) const = default;
};

}  // namespace

IOStats execute_plan(const UpdatePlan& plan, LogStore& store, const StorageLayout& old_layout,
                     const StorageLayout& new_layout, const Catalog& catalog) {
  if (store.generation() != plan.generation) throw Error(ErrorCode::PlanStale, "log changed since the plan was made");
  IOStats stats;
  if (plan.empty()) return stats;

  const auto& old_split = old_layout.split();
  const auto& new_split = new_layout.split();

  // Per old shard: rows to drop and slot rewrites, keyed by position.
  std::map<ShardId, std::set<std::size_t>> erase;
  std::map<ShardId, std::map<std::size_t, std::vector<FilterId>>> modify;
  std::map<ShardId, std::vector<EventRow>> append;

  std::set<BehaviorId> affected;
  for (const auto& bp : plan.behaviors) affected.insert(bp.behavior);

  std::map<RowKey, std::pair<ShardId, std::size_t>> where;
  std::map<std::pair<BehaviorId, std::uint64_t>, std::pair<ShardId, std::size_t>> source;
  std::map<BehaviorId, std::map<FilterId, std::size_t>> old_group_of;
  for (const auto& bp : plan.behaviors) {
    for (std::size_t g = 0; g < bp.old_groups.size(); ++g) {
      for (auto f : bp.old_groups[g]) old_group_of[bp.behavior][f] = g;
    }
  }
  for (const auto& [sid, shard] : store.shards()) {
    for (std::size_t pos = 0; pos < shard.row_count(); ++pos) {
      const auto& r = shard.row(pos);
      if (!affected.count(r.behavior)) continue;
      const auto f = min_slot(r.slots);
      auto& groups = old_group_of[r.behavior];
      auto g = groups.find(f);
      if (g == groups.end()) throw Error(ErrorCode::PlanStale, "row belongs to no planned group");
      where[{r.behavior, g->second, r.seq_id}] = {sid, pos};
      source.emplace(std::make_pair(r.behavior, r.seq_id), std::make_pair(sid, pos));
    }
  }
  auto locate = [&](BehaviorId b, std::size_t g, std::uint64_t seq) {
    auto it = where.find({b, g, seq});
    if (it == where.end()) throw Error(ErrorCode::PlanStale, "planned row is missing from the log");
    return it->second;
  };

  std::set<std::pair<BehaviorId, std::uint64_t>> read_events;
  auto read_source = [&](BehaviorId b, std::uint64_t seq) -> const EventRow& {
    auto it = source.find({b, seq});
    if (it == source.end()) throw Error(ErrorCode::PlanStale, "no stored row for event " + std::to_string(seq));
    if (read_events.insert({b, seq}).second) ++stats.rows_read;
    return store.shard(it->second.first).row(it->second.second);
  };

  for (const auto& bp : plan.behaviors) {
    const auto b = bp.behavior;
    const auto old_shard = old_split.shard_for(b);
    const auto new_shard = new_split.shard_for(b);

    if (bp.full_rebuild) {
      std::set<std::uint64_t> seqs;
      for (const auto& [key, loc] : where) {
        if (key.behavior != b) continue;
        erase[loc.first].insert(loc.second);
        ++stats.rows_deleted;
        seqs.insert(key.seq);
      }
      for (auto seq : seqs) {
        const auto& src = read_source(b, seq);
        BehaviorEvent e{src.seq_id, src.behavior, src.timestamp_ms,
                        devirtualize(src.cells, b, catalog, old_layout.mapping())};
        for (auto& r : rows_for_event(e, catalog, new_layout)) {
          append[new_shard].push_back(std::move(r));
          ++stats.rows_written;
        }
      }
      continue;
    }

    for (const auto& p : bp.pairs) {
      for (auto seq : p.remove) {
        const auto loc = locate(b, p.old_group, seq);
        erase[loc.first].insert(loc.second);
        ++stats.rows_deleted;
      }
      for (const auto& w : p.rewrite) {
        const auto loc = locate(b, p.old_group, w.seq_id);
        const auto& before = store.shard(loc.first).row(loc.second).slots;
        for (std::size_t c = 0; c < w.slots.size(); ++c) {
          if (c >= before.size() || before[c] != w.slots[c]) ++stats.cells_rewritten;
        }
        modify[loc.first][loc.second] = w.slots;
        ++stats.rows_modified;
      }
      for (const auto& w : p.insert) {
        const auto& src = read_source(b, w.seq_id);
        append[new_shard].push_back({src.seq_id, src.behavior, src.timestamp_ms, src.cells, w.slots});
        ++stats.rows_written;
      }
    }
    (void)old_shard;
  }

  // Re-materialize every shard that changes.
  std::set<ShardId> touched;
  for (const auto& [sid, v] : erase) touched.insert(sid);
  for (const auto& [sid, v] : modify) touched.insert(sid);
  for (const auto& [sid, v] : append) touched.insert(sid);
  for (const auto& [sid, r] : plan.slot_resize) touched.insert(sid);
  for (auto sid : plan.shards_added) touched.insert(sid);

  for (auto sid : plan.shards_removed) {
    if (!store.has_shard(sid)) continue;
    // Rows of a removed shard were all deleted by their behaviors' rebuilds.
    store.drop_shard(sid);
    if (!new_split.column_widths.count(sid)) touched.erase(sid);
  }

  for (auto sid : touched) {
    if (!new_split.column_widths.count(sid)) continue;
    const auto width = new_layout.slot_count(sid);
    LogShard fresh(sid, new_split.column_widths.at(sid), width);
    if (store.has_shard(sid) && !std::count(plan.shards_added.begin(), plan.shards_added.end(), sid)) {
      const auto& old = store.shard(sid);
      const auto& gone = erase[sid];
      const auto& changed = modify[sid];
      for (std::size_t pos = 0; pos < old.row_count(); ++pos) {
        if (gone.count(pos)) continue;
        EventRow r = old.row(pos);
        if (auto it = changed.find(pos); it != changed.end()) {
          r.slots = it->second;
        } else if (r.slots.size() != width) {
          for (std::size_t c = width; c < r.slots.size(); ++c) {
            if (r.slots[c] != kNullFilter) throw Error(ErrorCode::SlotCountMismatch, "shrinking a used slot column");
          }
          stats.cells_rewritten += r.slots.size() > width ? r.slots.size() - width : width - r.slots.size();
          ++stats.rows_resized;
          r.slots.resize(width, kNullFilter);
        }
        fresh.append_row(std::move(r));
      }
    }
    for (auto& r : append[sid]) fresh.append_row(std::move(r));
    fresh.canonicalize();
    store.put_shard(std::move(fresh));
  }
  return stats;
}

std::vector<BehaviorEvent> events_from_log(const LogStore& store, const StorageLayout& layout, const Catalog& catalog) {
  if (layout.sparse_cells()) throw Error(ErrorCode::InvalidArgument, "a sparse log does not hold whole events");
  std::map<std::uint64_t, BehaviorEvent> seen;
  for (const auto& [sid, shard] : store.shards()) {
    for (const auto& r : shard.rows()) {
      if (seen.count(r.seq_id)) continue;
      seen.emplace(r.seq_id, BehaviorEvent{r.seq_id, r.behavior, r.timestamp_ms,
                                           devirtualize(r.cells, r.behavior, catalog, layout.mapping())});
    }
  }
  std::vector<BehaviorEvent> out;
  out.reserve(seen.size());
  for (auto& [seq, e] : seen) out.push_back(std::move(e));
  return out;
}

LogStore build_log(const std::vector<BehaviorEvent>& events, const Catalog& catalog, const StorageLayout& layout) {
  auto store = layout.make_store();
  for (const auto& e : events) write_event(e, catalog, layout, store);
  store.canonicalize();
  return store;
}

std::pair<LogStore, IOStats> rebuild_log(const LogStore& store, const StorageLayout& old_layout,
                                         const StorageLayout& new_layout, const Catalog& catalog) {
  IOStats stats;
  stats.rows_read = store.row_count();
  auto fresh = build_log(events_from_log(store, old_layout, catalog), catalog, new_layout);
  stats.rows_written = fresh.row_count();
  return {std::move(fresh), stats};
}

}  // namespace evlog
