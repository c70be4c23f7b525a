#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "evlog/error.hpp"
#include "evlog/merge_opt.hpp"
#include "evlog/profiler.hpp"
#include "support.hpp"

using namespace evlog;

namespace {

// One behavior with a:8, b:8, c:4 and one filter per required-attr list.
struct Fixture {
  Catalog catalog;
  ProfileMetadata meta;
  BehaviorId b = 0;
  std::vector<FilterId> f;

  explicit Fixture(const std::vector<std::vector<std::string>>& required) {
    b = catalog.register_behavior(
        {0, "act", {{"a", AttrKind::int64, 8}, {"b", AttrKind::int64, 8}, {"c", AttrKind::int64, 4}}});
    for (const auto& r : required) f.push_back(catalog.register_filter({0, b, {}, r}));
    catalog.freeze();
    meta = empty_profile(catalog);
  }
  void events(std::size_t i, std::vector<std::uint64_t> e) {
    std::sort(e.begin(), e.end());
    meta.filters[f[i]].events = std::move(e);
  }
};

std::set<std::uint64_t> union_events(const ProfileMetadata& meta, const std::vector<FilterId>& members) {
  std::set<std::uint64_t> out;
  for (auto m : members) out.insert(meta.filter(m).events.begin(), meta.filter(m).events.end());
  return out;
}

std::uint64_t union_attr_bytes(const Catalog& c, const std::vector<FilterId>& members) {
  std::set<std::string> names;
  for (auto m : members) names.insert(c.filter(m).required_attrs.begin(), c.filter(m).required_attrs.end());
  std::uint64_t bytes = 0;
  for (const auto& n : names) bytes += c.attr(c.filter(members[0]).behavior, n).width_bytes;
  return bytes;
}

// Priced size of a partition, straight from the definitions.
std::uint64_t partition_cost(const Catalog& c, const ProfileMetadata& meta,
                             const std::vector<std::vector<FilterId>>& partition) {
  std::uint64_t total = 0;
  for (const auto& g : partition) {
    const auto e = union_events(meta, g).size();
    total += e * union_attr_bytes(c, g) + e * 8 * g.size();
  }
  return total;
}

void all_partitions(const std::vector<FilterId>& items, std::size_t i, std::vector<std::vector<FilterId>>& cur,
                    const std::function<void(const std::vector<std::vector<FilterId>>&)>& visit) {
  if (i == items.size()) {
    visit(cur);
    return;
  }
  for (std::size_t g = 0; g < cur.size(); ++g) {
    cur[g].push_back(items[i]);
    all_partitions(items, i + 1, cur, visit);
    cur[g].pop_back();
  }
  cur.push_back({items[i]});
  all_partitions(items, i + 1, cur, visit);
  cur.pop_back();
}

std::vector<std::vector<FilterId>> members_of(const MergeResult& r) {
  std::vector<std::vector<FilterId>> out;
  for (const auto& g : r.groups) out.push_back(g.members);
  return out;
}

}  // namespace

TEST_CASE("group_data_size") {
  Fixture fx({{"a", "b"}, {"b", "c"}});
  SUBCASE("empty group") { CHECK(group_data_size(make_group({fx.f[0]}, fx.meta, fx.catalog)) == 0); }
  fx.events(0, {1, 2, 3});
  fx.events(1, {2, 3, 4});
  SUBCASE("two overlapping filters") {
    const auto g = make_group({fx.f[0], fx.f[1]}, fx.meta, fx.catalog);
    const auto oracle = union_events(fx.meta, g.members).size() * union_attr_bytes(fx.catalog, g.members);
    CHECK(group_data_size(g) == oracle);
    CHECK(group_data_size(g) == 80);
    CHECK(g.attrs == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("singleton") { CHECK(group_data_size(make_group({fx.f[0]}, fx.meta, fx.catalog)) == 48); }
}

TEST_CASE("group_index_size") {
  Fixture fx({{"a"}, {"b"}});
  CHECK(group_index_size(make_group({fx.f[0]}, fx.meta, fx.catalog), 8, 1) == 0);
  fx.events(0, {1, 2, 3});
  fx.events(1, {2, 3, 4});
  const auto g = make_group({fx.f[0], fx.f[1]}, fx.meta, fx.catalog);
  CHECK(group_index_size(g, 8, 2) == union_events(fx.meta, g.members).size() * 8 * 2);
  CHECK(group_index_size(g, 8, 2) == 64);
  CHECK(group_index_size(make_group({fx.f[0]}, fx.meta, fx.catalog), 8, 1) == 3 * 8);
}

TEST_CASE("edge_weight") {
  SUBCASE("identical singletons") {
    Fixture fx({{"a", "b"}, {"a", "b"}});
    fx.events(0, {1, 2, 3});
    fx.events(1, {1, 2, 3});
    const auto g1 = make_group({fx.f[0]}, fx.meta, fx.catalog);
    const auto g2 = make_group({fx.f[1]}, fx.meta, fx.catalog);
    CHECK(edge_weight(g1, g2, fx.catalog, 8) == 48);
  }
  SUBCASE("partial overlap nets to zero") {
    Fixture fx({{"a", "b"}, {"b", "c"}});
    fx.events(0, {1, 2, 3});
    fx.events(1, {2, 3, 4});
    const auto g1 = make_group({fx.f[0]}, fx.meta, fx.catalog);
    const auto g2 = make_group({fx.f[1]}, fx.meta, fx.catalog);
    // data: |∩|=2 × (16 + 12 − 20) = 16; index: (4·2 − 3 − 3) × 8 = 16
    CHECK(edge_weight(g1, g2, fx.catalog, 8) == 0);
    const auto r = hierarchical_merge(fx.meta, fx.catalog, fx.b);
    CHECK(r.groups.size() == 2);
  }
  SUBCASE("disjoint events and attrs") {
    Fixture fx({{"a"}, {"b"}});
    fx.events(0, {1});
    fx.events(1, {2});
    const auto g1 = make_group({fx.f[0]}, fx.meta, fx.catalog);
    const auto g2 = make_group({fx.f[1]}, fx.meta, fx.catalog);
    CHECK(edge_weight(g1, g2, fx.catalog, 8) == -16);
  }
}

TEST_CASE("hierarchical_merge") {
  SUBCASE("all disjoint") {
    Fixture fx({{"a"}, {"b"}, {"c"}});
    fx.events(0, {1, 2});
    fx.events(1, {3, 4});
    fx.events(2, {5});
    const auto r = hierarchical_merge(fx.meta, fx.catalog, fx.b);
    CHECK(r.groups.size() == 3);
    CHECK(r.trace.empty());
  }
  SUBCASE("two identical filters") {
    Fixture fx({{"a"}, {"a"}});
    fx.events(0, {1, 2, 3});
    fx.events(1, {1, 2, 3});
    const auto r = hierarchical_merge(fx.meta, fx.catalog, fx.b);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].members == std::vector<FilterId>{fx.f[0], fx.f[1]});
    CHECK(r.trace.size() == 1);
  }
  SUBCASE("two high-overlap pairs, checked against every partition") {
    Fixture fx({{"a", "b"}, {"a", "b"}, {"c"}, {"c"}});
    fx.events(0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    fx.events(1, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    fx.events(2, {11, 12, 13, 14, 15, 16});
    fx.events(3, {11, 12, 13, 14, 15, 16, 17});
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 2; j < 4; ++j) {
        CHECK(edge_weight(make_group({fx.f[i]}, fx.meta, fx.catalog), make_group({fx.f[j]}, fx.meta, fx.catalog),
                          fx.catalog, 8) <= 0);
      }
    }
    const auto r = hierarchical_merge(fx.meta, fx.catalog, fx.b);
    const std::vector<std::vector<FilterId>> expected{{fx.f[0], fx.f[1]}, {fx.f[2], fx.f[3]}};
    CHECK(members_of(r) == expected);
    // one merging iteration; the second finds an empty matching and stops
    CHECK(r.trace.size() == 1);

    std::uint64_t best = UINT64_MAX;
    std::vector<std::vector<FilterId>> cur;
    all_partitions(fx.f, 0, cur, [&](const auto& p) { best = std::min(best, partition_cost(fx.catalog, fx.meta, p)); });
    CHECK(partition_cost(fx.catalog, fx.meta, expected) == best);
    CHECK(modeled_size(r.groups, 8) == best);
  }
}

TEST_CASE("build_merge_config") {
  Catalog c;
  const auto b = c.register_behavior(testing::video_play());
  const auto f1 = c.register_filter({0, b, {}, {"duration"}});
  const auto f2 = c.register_filter({0, b, {}, {"genre"}});
  const auto f3 = c.register_filter({0, b, {}, {"genre"}});
  c.freeze();
  const auto split = build_split_config(c).first;
  const auto shard = split.shard_for(b);

  SUBCASE("all singletons") {
    const auto cfg = singleton_merge_config(c, split);
    CHECK(cfg.slots_for(shard) == 1);
    for (auto f : {f1, f2, f3}) CHECK(cfg.slot_column.at(f) == 0);
  }
  SUBCASE("sizes 2 and 1") {
    const auto cfg = build_merge_config({{b, {{f3, f1}, {f2}}}}, split);
    CHECK(cfg.slots_for(shard) == 2);
    CHECK(cfg.slot_column.at(f1) == 0);
    CHECK(cfg.slot_column.at(f3) == 1);
    CHECK(cfg.slot_column.at(f2) == 0);
    CHECK(cfg.group_index(f2, b) == 1);
    CHECK(MergeConfig::from_json(cfg.to_json()) == cfg);
  }
  SUBCASE("a filter in two groups") {
    CHECK_THROWS_AS(build_merge_config({{b, {{f1, f2}, {f2, f3}}}}, split), Error);
  }
}

TEST_CASE("property: monotone trace, iteration bound, optimal small instances") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 7)(rng);
    std::vector<std::vector<std::string>> required;
    const std::vector<std::string> names{"a", "b", "c"};
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> r;
      for (const auto& nm : names) {
        if (rng() % 2) r.push_back(nm);
      }
      if (r.empty()) r.push_back("a");
      required.push_back(r);
    }
    Fixture fx(required);
    // events drawn from a few shared pools so overlaps are common
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint64_t> e;
      const auto base = (rng() % 3) * 10;
      for (std::uint64_t k = 0; k < 12; ++k) {
        if (rng() % 4 != 0) e.push_back(base + k);
      }
      fx.events(i, e);
    }
    const auto r = hierarchical_merge(fx.meta, fx.catalog, fx.b);
    std::size_t merges = 0;
    for (const auto& it : r.trace) {
      CHECK(it.size_after < it.size_before);
      CHECK(it.merges >= 1);
      merges += it.merges;
    }
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].size_before == r.trace[i - 1].size_after);
    CHECK(merges <= n - 1);
    CHECK(r.trace.size() <= n);
    CHECK(merges == n - r.groups.size());

    // groups partition the behavior's filters and caches match members
    std::vector<FilterId> all;
    for (const auto& g : r.groups) {
      all.insert(all.end(), g.members.begin(), g.members.end());
      const auto e = union_events(fx.meta, g.members);
      CHECK(g.events == std::vector<std::uint64_t>(e.begin(), e.end()));
      CHECK(g.attr_bytes == union_attr_bytes(fx.catalog, g.members));
    }
    std::sort(all.begin(), all.end());
    CHECK(all == fx.f);

    // never worse than leaving every filter alone
    std::vector<FeatureGroup> singles;
    for (auto f : fx.f) singles.push_back(make_group({f}, fx.meta, fx.catalog));
    CHECK(modeled_size(r.groups, 8) <= modeled_size(singles, 8));
  }
}

TEST_CASE("property: behavior independence") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Catalog c;
    const auto b0 = c.register_behavior({0, "p", {{"a", AttrKind::int64, 8}, {"b", AttrKind::int64, 8}}});
    const auto b1 = c.register_behavior({0, "q", {{"x", AttrKind::int64, 8}}});
    for (int i = 0; i < 4; ++i) c.register_filter({0, b0, {}, {i % 2 ? "a" : "b"}});
    for (int i = 0; i < 3; ++i) c.register_filter({0, b1, {}, {"x"}});
    c.freeze();
    auto meta = empty_profile(c);
    auto fill = [&](BehaviorId b) {
      for (auto f : c.filters_of(b)) {
        std::vector<std::uint64_t> e;
        for (std::uint64_t k = 0; k < 20; ++k) {
          if (rng() % 3 == 0) e.push_back(k + 100 * b);
        }
        meta.filters[f].events = e;
      }
    };
    fill(b0);
    fill(b1);
    const auto before = members_of(hierarchical_merge(meta, c, b0));
    fill(b1);  // different data for the other behavior
    CHECK(members_of(hierarchical_merge(meta, c, b0)) == before);
  }
}
