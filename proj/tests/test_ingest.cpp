#include <doctest.h>

#include <random>
#include <set>

#include "evlog/error.hpp"
#include "evlog/featcomp.hpp"
#include "evlog/ingest.hpp"
#include "evlog/layout.hpp"
#include "evlog/workload.hpp"
#include "support.hpp"

using namespace evlog;
using testing::event;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

// Predicate truth straight from the declarations.
std::vector<FilterId> brute_force_matches(const BehaviorEvent& e, const Catalog& c) {
  std::vector<FilterId> out;
  for (const auto& [id, f] : c.filters()) {
    if (f.behavior != e.behavior) continue;
    bool ok = true;
    for (const auto& p : f.predicates) ok = ok && e.values.at(p.attr) == p.value;
    if (ok) out.push_back(id);
  }
  return out;
}

std::vector<FilterId> ids(const std::vector<FilterMatch>& ms) {
  std::vector<FilterId> out;
  for (const auto& m : ms) out.push_back(m.filter);
  return out;
}

// Three events and four boolean-predicate filters:
// 7 baseline rows, 3 unique events.
struct Overlap {
  Catalog catalog;
  BehaviorId b = 0;
  FilterId f1 = 0, f2 = 0, f3 = 0, f4 = 0;
  std::vector<BehaviorEvent> events;

  Overlap() {
    b = catalog.register_behavior(
        {0, "watch", {{"x", AttrKind::boolean, 1}, {"y", AttrKind::boolean, 1}, {"z", AttrKind::boolean, 1}}});
    f1 = catalog.register_filter({0, b, {{"x", true}}, {"x"}});
    f2 = catalog.register_filter({0, b, {{"x", true}}, {"y"}});
    f3 = catalog.register_filter({0, b, {{"y", true}}, {"z"}});
    f4 = catalog.register_filter({0, b, {{"z", true}}, {"x", "z"}});
    catalog.freeze();
    events = {event(1, b, 10, {{"x", true}, {"y", false}, {"z", false}}),
              event(2, b, 20, {{"x", true}, {"y", true}, {"z", false}}),
              event(3, b, 30, {{"x", false}, {"y", true}, {"z", true}})};
  }
};

}  // namespace

TEST_CASE("match_filters") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  const auto all = c.register_filter({0, vp, {}, {"duration"}});
  const auto friends = c.register_filter({0, vp, {{"genre", std::string("friend")}}, {"duration"}});
  const auto long_ones = c.register_filter({0, vp, {{"duration", std::int64_t{60}}}, {"genre"}});
  c.freeze();

  const auto e_friend = event(1, vp, 0, {{"duration", std::int64_t{12}}, {"genre", std::string("friend")}});
  const auto e_ad = event(2, vp, 0, {{"duration", std::int64_t{12}}, {"genre", std::string("ad")}});
  CHECK(ids(match_filters(e_friend, c)) == std::vector<FilterId>{all, friends});
  CHECK(ids(match_filters(e_ad, c)) == std::vector<FilterId>{all});
  CHECK(ids(match_filters(e_friend, c)) == brute_force_matches(e_friend, c));
  CHECK(match_filters(e_friend, c)[1].required == std::vector<std::string>{"duration"});
  (void)long_ones;

  CHECK(code_of([&] { match_filters(event(1, 5, 0, {}), c); }) == ErrorCode::UnknownBehavior);
}

TEST_CASE("validate_event") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  c.freeze();
  CHECK(code_of([&] { validate_event(event(1, 3, 0, {}), c); }) == ErrorCode::UnknownBehavior);
  CHECK(code_of([&] { validate_event(event(1, vp, 0, {{"duration", std::int64_t{1}}}), c); }) ==
        ErrorCode::MissingAttribute);
  CHECK(code_of([&] {
          validate_event(event(1, vp, 0, {{"duration", std::string("x")}, {"genre", std::string("y")}}), c);
        }) == ErrorCode::TypeMismatch);
  CHECK(code_of([&] {
          validate_event(
              event(1, vp, 0, {{"duration", std::int64_t{1}}, {"genre", std::string("y")}, {"extra", true}}), c);
        }) == ErrorCode::UnknownAttribute);
}

TEST_CASE("write_event_baseline writes one row per matched filter") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  c.register_filter({0, vp, {}, {"duration"}});
  c.register_filter({0, vp, {}, {"genre"}});
  c.register_filter({0, vp, {{"genre", std::string("pop")}}, {"duration", "genre"}});
  c.register_filter({0, vp, {{"genre", std::string("rock")}}, {"duration"}});
  c.freeze();
  const auto layout = StorageLayout::unified(c);
  auto store = layout.make_store();

  const auto pop = event(1, vp, 0, {{"duration", std::int64_t{12}}, {"genre", std::string("pop")}});
  CHECK(write_event_baseline(pop, c, layout, store) == 3);
  const auto jazz = event(2, vp, 0, {{"duration", std::int64_t{3}}, {"genre", std::string("jazz")}});
  CHECK(write_event_baseline(jazz, c, layout, store) == 2);
  CHECK(store.row_count() == 5);

  // only the filter's required attributes are populated
  const auto& rows = store.shards().begin()->second.rows();
  const auto nulls = [](const EventRow& r) {
    return std::count_if(r.cells.begin(), r.cells.end(), [](const Value& v) { return is_null(v); });
  };
  CHECK(nulls(rows[0]) == 1);
  CHECK(nulls(rows[1]) == 1);
  CHECK(nulls(rows[2]) == 0);

  Catalog empty_behavior;
  const auto b = empty_behavior.register_behavior(testing::click());
  empty_behavior.register_filter({0, b, {{"target", std::string("buy")}}, {"pos"}});
  const auto l2 = StorageLayout::unified(empty_behavior);
  auto s2 = l2.make_store();
  CHECK(write_event_baseline(event(1, b, 0, {{"target", std::string("x")}, {"pos", std::int64_t{1}}}), empty_behavior,
                             l2, s2) == 0);
}

TEST_CASE("write_event_optimized fills group slots") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  const auto f1 = c.register_filter({0, vp, {}, {"duration"}});
  const auto f2 = c.register_filter({0, vp, {{"genre", std::string("pop")}}, {"genre"}});
  c.freeze();
  const auto layout = StorageLayout::optimized(c, {{vp, {{f1, f2}}}});
  auto store = layout.make_store();
  const auto shard = layout.split().shard_for(vp);

  CHECK(write_event_optimized(event(1, vp, 0, {{"duration", std::int64_t{5}}, {"genre", std::string("pop")}}), c,
                              layout, store) == 1);
  CHECK(write_event_optimized(event(2, vp, 0, {{"duration", std::int64_t{6}}, {"genre", std::string("ad")}}), c,
                              layout, store) == 1);
  const auto& rows = store.shard(shard).rows();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].slots == std::vector<FilterId>{f1, f2});
  CHECK(rows[1].slots == std::vector<FilterId>{f1, kNullFilter});
  // the merged row stores the full event
  CHECK(rows[1].cells == std::vector<Value>{std::int64_t{6}, std::string("ad")});

  SUBCASE("configuration without the behavior") {
    const auto [split, mapping] = build_split_config(c);
    const StorageLayout bare(LayoutKind::vhan, split, mapping, MergeConfig{{}, {}, {{split.shard_for(vp), 1}}});
    auto s = bare.make_store();
    CHECK(code_of([&] {
            write_event_optimized(event(3, vp, 0, {{"duration", std::int64_t{5}}, {"genre", std::string("x")}}), c,
                                  bare, s);
          }) == ErrorCode::ConfigMissingBehavior);
  }
}

TEST_CASE("overlapping filters: 7 rows become 4, index 8 addresses against 12") {
  Overlap fig;
  const auto baseline = StorageLayout::unified(fig.catalog);
  const auto two_groups = StorageLayout::optimized(fig.catalog, {{fig.b, {{fig.f1, fig.f2}, {fig.f3, fig.f4}}}});
  const auto full = StorageLayout::optimized(fig.catalog, {{fig.b, {{fig.f1, fig.f2, fig.f3, fig.f4}}}});
  auto sb = baseline.make_store();
  auto s2 = two_groups.make_store();
  auto sf = full.make_store();
  for (const auto& e : fig.events) {
    write_event(e, fig.catalog, baseline, sb);
    write_event(e, fig.catalog, two_groups, s2);
    write_event(e, fig.catalog, full, sf);
  }
  CHECK(sb.row_count() == 7);
  CHECK(s2.row_count() == 4);
  CHECK(sf.row_count() == 3);
  CHECK(sb.measure_sizes().index_address_bytes / kDefaultAddrBytes == 7);
  CHECK(s2.measure_sizes().index_address_bytes / kDefaultAddrBytes == 8);
  CHECK(sf.measure_sizes().index_address_bytes / kDefaultAddrBytes == 12);
}

TEST_CASE("event files round trip") {
  Overlap fig;
  testing::TempDir dir("events");
  const auto path = dir.path / "events.ndjson";
  write_events(path, {fig.events[0], fig.events[1]});
  write_events(path, {fig.events[2]}, true);
  CHECK(read_events(path, fig.catalog) == fig.events);

  write_events(path, {fig.events[1], fig.events[0]});
  CHECK_THROWS_AS(read_events(path, fig.catalog), Error);
}

TEST_CASE("property: retrieval equivalence and row-count identity") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    WorkloadParams p;
    p.seed = seed;
    p.behavior_count = 8;
    p.model_count = 5;
    p.days = 2;
    p.events_per_day = 150;
    const auto w = generate(p);
    const auto& c = w.catalog;

    // random grouping of each behavior's filters
    std::mt19937_64 rng(seed);
    std::map<BehaviorId, std::vector<std::vector<FilterId>>> groups;
    for (const auto& b : c.behaviors()) {
      for (auto f : c.filters_of(b.id)) {
        auto& gs = groups[b.id];
        if (gs.empty() || rng() % 2) {
          gs.push_back({f});
        } else {
          gs[rng() % gs.size()].push_back(f);
        }
      }
    }
    const auto base_layout = StorageLayout::unified(c);
    for (const bool vhan : {true, false}) {
      const auto opt_layout = StorageLayout::optimized(c, groups, vhan);
      auto base = base_layout.make_store();
      auto opt = opt_layout.make_store();
      for (const auto& e : w.events) {
        const auto nb = write_event(e, c, base_layout, base);
        const auto no = write_event(e, c, opt_layout, opt);
        CHECK(no <= nb);
        std::set<std::size_t> hit_groups;
        for (const auto& m : match_filters(e, c)) hit_groups.insert(opt_layout.merge().group_index(m.filter, e.behavior));
        CHECK(nb == match_filters(e, c).size());
        CHECK(no == hit_groups.size());
      }
      // every filter sees the same (event, required attrs) pairs
      const std::int64_t end = w.events.empty() ? 0 : w.events.back().timestamp_ms + 1;
      for (const auto& [fid, f] : c.filters()) {
        Feature probe{kAutoFeatureId, fid, end + 1, FeatureFunc::count, ""};
        CHECK(retrieve(probe, c, opt_layout, opt, end) == retrieve(probe, c, base_layout, base, end));
      }

      // and the same after a trip through shard files
      testing::TempDir dir("ingest");
      opt.write_dir(dir.path);
      const auto back = LogStore::read_dir(dir.path, opt_layout.resolver(c));
      for (const auto& [id, s] : opt.shards()) CHECK(back.shard(id).rows() == s.rows());
    }
  }
}
