#include <doctest.h>

#include <random>
#include <set>

#include "evlog/error.hpp"
#include "evlog/split_opt.hpp"
#include "support.hpp"

using namespace evlog;

namespace {

BehaviorType behavior_with(const std::string& name, std::size_t k, std::uint16_t width = 8) {
  BehaviorType b{0, name, {}};
  for (std::size_t i = 0; i < k; ++i) b.attrs.push_back({name + "_a" + std::to_string(i), AttrKind::int64, width});
  return b;
}

Value random_value(std::mt19937_64& rng, const AttributeDef& a) {
  switch (a.kind) {
    case AttrKind::int64: return std::int64_t(rng() % 100);
    case AttrKind::float64: return double(rng() % 1000) / 8.0;
    case AttrKind::boolean: return bool(rng() % 2);
    case AttrKind::utf8: return std::string(rng() % (a.width_bytes + 1), 'a' + char(rng() % 26));
  }
  return {};
}

Catalog random_catalog(std::mt19937_64& rng) {
  Catalog c;
  const auto n = 1 + rng() % 12;
  for (std::size_t i = 0; i < n; ++i) {
    BehaviorType b{0, "b" + std::to_string(i), {}};
    const auto k = 1 + rng() % 6;
    for (std::size_t j = 0; j < k; ++j) {
      const auto kind = static_cast<AttrKind>(rng() % 4);
      std::uint16_t w = kind == AttrKind::float64 ? 8 : kind == AttrKind::int64 ? 8 : std::uint16_t(1 + rng() % 12);
      if (kind == AttrKind::boolean) w = 1;
      b.attrs.push_back({"x" + std::to_string(rng() % 20) + "_" + std::to_string(j), kind, w});
    }
    c.register_behavior(b);
  }
  c.freeze();
  return c;
}

}  // namespace

TEST_CASE("shards follow distinct attribute counts") {
  Catalog c;
  c.register_behavior(behavior_with("p", 2));
  c.register_behavior(behavior_with("q", 2));
  c.register_behavior(behavior_with("r", 3));
  const auto [split, mapping] = build_split_config(c);
  CHECK(split.column_widths.size() == 2);
  CHECK(split.shard_for(0) == 2);
  CHECK(split.shard_for(1) == 2);
  CHECK(split.shard_for(2) == 3);
}

TEST_CASE("video_play and click share the k=2 shard") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  const auto cl = c.register_behavior(testing::click());
  const auto [split, mapping] = build_split_config(c);
  CHECK(split.shard_for(vp) == split.shard_for(cl));
  CHECK(mapping.columns.at(vp) == std::vector<std::uint16_t>{0, 1});
  CHECK(mapping.columns.at(cl) == std::vector<std::uint16_t>{0, 1});
  // column width is the widest mapped attribute: max(8,12), max(16,4)
  CHECK(split.column_widths.at(2) == std::vector<std::uint16_t>{12, 16});
  CHECK(split.column_names.empty());
}

TEST_CASE("250 behaviors over 20 distinct counts give 20 shards") {
  Catalog c;
  for (std::size_t i = 0; i < 250; ++i) c.register_behavior(behavior_with("b" + std::to_string(i), 1 + i % 20));
  const auto [split, mapping] = build_split_config(c);
  CHECK(split.column_widths.size() == 20);
  CHECK(mapping.columns.size() == 250);
}

TEST_CASE("virtualize and devirtualize") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  const auto [split, mapping] = build_split_config(c);
  const std::map<std::string, Value> values{{"duration", std::int64_t{12}}, {"genre", std::string("pop")}};
  const auto cells = virtualize(values, vp, c, mapping, 2);
  CHECK(cells == std::vector<Value>{std::int64_t{12}, std::string("pop")});
  CHECK(devirtualize(cells, vp, c, mapping) == values);

  SUBCASE("missing attribute") {
    try {
      virtualize({{"duration", std::int64_t{1}}}, vp, c, mapping, 2);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingAttribute);
    }
  }
  SUBCASE("unknown behavior") {
    try {
      devirtualize(cells, 9, c, mapping);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownBehavior);
    }
  }
}

TEST_CASE("physical and unified splits keep names") {
  Catalog c;
  const auto vp = c.register_behavior(testing::video_play());
  const auto cl = c.register_behavior(testing::click());
  c.register_behavior(behavior_with("r", 3));

  const auto [phys, pmap] = build_physical_split(c);
  CHECK(phys.column_widths.size() == 2);
  CHECK(phys.column_names.at(2) == std::vector<std::string>{"duration", "genre", "pos", "target"});
  CHECK(pmap.columns.at(vp) == std::vector<std::uint16_t>{0, 1});
  CHECK(pmap.columns.at(cl) == std::vector<std::uint16_t>{3, 2});

  const auto [uni, umap] = build_unified_split(c);
  REQUIRE(uni.column_widths.size() == 1);
  const auto id = uni.shard_for(vp);
  CHECK(id == 7);
  CHECK(uni.column_widths.at(id).size() == 7);
  CHECK(uni.shard_for(cl) == id);
}

TEST_CASE("property: round trip and density on random catalogs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_catalog(rng);
    const auto [split, mapping] = build_split_config(c);

    std::set<std::size_t> counts;
    for (const auto& b : c.behaviors()) counts.insert(b.attrs.size());
    CHECK(split.column_widths.size() == counts.size());
    CHECK(split.column_widths.size() <= c.max_attr_count());

    for (const auto& b : c.behaviors()) {
      const auto shard = split.shard_for(b.id);
      const auto& widths = split.column_widths.at(shard);
      CHECK(widths.size() == b.attrs.size());
      // bijective onto 0..k-1
      auto cols = mapping.columns.at(b.id);
      std::sort(cols.begin(), cols.end());
      for (std::size_t i = 0; i < cols.size(); ++i) CHECK(cols[i] == i);

      std::map<std::string, Value> values;
      for (const auto& a : b.attrs) values[a.name] = random_value(rng, a);
      const auto cells = virtualize(values, b.id, c, mapping, widths.size());
      for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK_FALSE(is_null(cells[i]));
        CHECK(fits_width(cells[i], widths[i]));
      }
      CHECK(devirtualize(cells, b.id, c, mapping) == values);
    }

    const auto [s2, m2] = split_from_json(to_json(split, mapping, c), c);
    CHECK(s2 == split);
    CHECK(m2 == mapping);
  }
}
