#include <doctest.h>

#include <fstream>
#include <numeric>

#include "evlog/error.hpp"
#include "evlog/ingest.hpp"
#include "evlog/profiler.hpp"
#include "evlog/workload.hpp"
#include "support.hpp"

using namespace evlog;
using testing::event;

namespace {

// E(f) by re-evaluating every predicate over the raw stream.
std::map<FilterId, std::vector<std::uint64_t>> reevaluate(const std::vector<BehaviorEvent>& events, const Catalog& c) {
  std::map<FilterId, std::vector<std::uint64_t>> out;
  for (const auto& [id, f] : c.filters()) out[id];
  for (const auto& e : events) {
    for (const auto& [id, f] : c.filters()) {
      if (f.behavior != e.behavior) continue;
      bool ok = true;
      for (const auto& p : f.predicates) ok = ok && e.values.at(p.attr) == p.value;
      if (ok) out[id].push_back(e.seq_id);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("profile small logs") {
  Catalog c;
  const auto b = c.register_behavior({0, "tap", {{"k", AttrKind::int64, 8}, {"m", AttrKind::int64, 4}}});
  const auto f1 = c.register_filter({0, b, {{"m", std::int64_t{1}}}, {"k"}});
  const auto f2 = c.register_filter({0, b, {{"k", std::int64_t{7}}}, {"k", "m"}});
  c.freeze();
  const auto layout = StorageLayout::unified(c);
  auto store = layout.make_store();

  SUBCASE("empty log") {
    const auto meta = profile(store, layout, c);
    CHECK(meta.filter(f1).events.empty());
    CHECK(meta.filter(f2).events.empty());
    CHECK(meta.filter(f2).attrs == std::vector<std::string>{"k", "m"});
    CHECK(meta.filter(f2).attr_bytes == 12);
    CHECK(meta.behaviors.at(b) == std::vector<FilterId>{f1, f2});
  }
  SUBCASE("five events") {
    const std::vector<BehaviorEvent> events{
        event(1, b, 1, {{"k", std::int64_t{0}}, {"m", std::int64_t{1}}}),
        event(2, b, 2, {{"k", std::int64_t{7}}, {"m", std::int64_t{1}}}),
        event(3, b, 3, {{"k", std::int64_t{7}}, {"m", std::int64_t{1}}}),
        event(4, b, 4, {{"k", std::int64_t{7}}, {"m", std::int64_t{2}}}),
        event(5, b, 5, {{"k", std::int64_t{3}}, {"m", std::int64_t{0}}}),
    };
    for (const auto& e : events) write_event(e, c, layout, store);
    const auto meta = profile(store, layout, c);
    CHECK(meta.filter(f1).events == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(meta.filter(f2).events == std::vector<std::uint64_t>{2, 3, 4});
    const auto oracle = reevaluate(events, c);
    CHECK(meta.filter(f1).events == oracle.at(f1));
    CHECK(meta.filter(f2).events == oracle.at(f2));

    const auto sizes = store.measure_sizes();
    const auto rows = sizes.data_bytes / store.shards().begin()->second.row_size();
    CHECK(meta.filter(f1).events.size() + meta.filter(f2).events.size() == rows);

    CHECK(ProfileMetadata::from_json(meta.to_json()) == meta);
  }
}

TEST_CASE("tampered index is detected") {
  Catalog c;
  const auto b = c.register_behavior({0, "tap", {{"k", AttrKind::int64, 8}}});
  c.register_filter({0, b, {}, {"k"}});
  c.freeze();
  const auto layout = StorageLayout::unified(c);
  auto store = layout.make_store();
  for (std::uint64_t i = 1; i <= 3; ++i) write_event(event(i, b, 0, {{"k", std::int64_t(i)}}), c, layout, store);
  testing::TempDir dir("corrupt");
  store.write_dir(dir.path);
  const auto path = LogStore::shard_path(dir.path, store.shards().begin()->first);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-8, std::ios::end);
    const char junk[8] = {1, 2, 3, 4, 5, 6, 7, 8};
    f.write(junk, 8);
  }
  try {
    LogStore::read_dir(dir.path, layout.resolver(c));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptIndex);
  }
}

TEST_CASE("property: profile equals predicate re-evaluation, under every layout") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    WorkloadParams p;
    p.seed = seed;
    p.behavior_count = 10;
    p.model_count = 6;
    p.days = 2;
    p.events_per_day = 200;
    const auto w = generate(p);
    const auto oracle = reevaluate(w.events, w.catalog);

    std::map<BehaviorId, std::vector<std::vector<FilterId>>> pairs;
    for (const auto& b : w.catalog.behaviors()) {
      const auto& fs = w.catalog.filters_of(b.id);
      for (std::size_t i = 0; i < fs.size(); i += 2) {
        std::vector<FilterId> g{fs[i]};
        if (i + 1 < fs.size()) g.push_back(fs[i + 1]);
        pairs[b.id].push_back(g);
      }
    }
    for (const auto& layout : {StorageLayout::unified(w.catalog), StorageLayout::optimized(w.catalog, pairs),
                               StorageLayout::optimized(w.catalog, pairs, false)}) {
      auto store = layout.make_store();
      for (const auto& e : w.events) write_event(e, w.catalog, layout, store);
      const auto meta = profile(store, layout, w.catalog);
      for (const auto& [fid, events] : oracle) CHECK(meta.filter(fid).events == events);
      CHECK(profile(store, layout, w.catalog) == meta);
      if (layout.kind() == LayoutKind::unified) {
        const auto total = std::accumulate(oracle.begin(), oracle.end(), std::size_t{0},
                                           [](std::size_t n, const auto& kv) { return n + kv.second.size(); });
        CHECK(total == store.row_count());
      }
    }
  }
}
