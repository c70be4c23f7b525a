#include "evlog/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <random>
#include <set>

#include "evlog/error.hpp"

namespace evlog {

namespace {

struct PoolAttr {
  const char* name;
  AttrKind kind;
  std::uint16_t width;
  std::size_t domain;  // > 0 for categorical attributes
};

// Shared attribute vocabulary; behaviors draw heterogeneous subsets.
constexpr PoolAttr kPool[] = {
    {"source", AttrKind::utf8, 8, 3},    {"genre", AttrKind::utf8, 8, 4},    {"page", AttrKind::utf8, 8, 5},
    {"channel", AttrKind::int64, 4, 2},  {"duration", AttrKind::int64, 8, 0}, {"amount", AttrKind::float64, 8, 0},
    {"score", AttrKind::float64, 8, 0},  {"item_id", AttrKind::int64, 8, 0}, {"clicks", AttrKind::int64, 4, 0},
    {"flag", AttrKind::boolean, 1, 0},   {"target", AttrKind::utf8, 8, 0},   {"session", AttrKind::int64, 8, 0},
};
constexpr std::size_t kPoolSize = std::size(kPool);

// Share of overlapping filters that add a conjunct and so only partly overlap.
constexpr double kNarrowShare = 0.5;

constexpr const char* kBehaviorNames[] = {
    "video_play", "click",  "search", "purchase", "share",   "like",    "comment", "scroll",  "open_app", "close_app",
    "download",   "follow", "login",  "logout",   "payment", "rating",  "install", "refresh", "notify",   "navigate"};

Value category(const PoolAttr& a, std::size_t j) {
  if (a.kind == AttrKind::int64) return static_cast<std::int64_t>(j);
  return std::string("c") + std::to_string(j);
}

struct BehaviorPlan {
  std::vector<std::size_t> attrs;  // pool indexes, ascending
  std::size_t partition = 0;       // pool index of the partitioning attribute
  std::size_t partition_domain = 0;
  std::size_t next_partition_value = 0;
};

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

}  // namespace

void WorkloadParams::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be in [0,1]");
  };
  prob(overlap_prob, "overlap_prob");
  prob(drift_rate, "drift_rate");
  if (target_null_share) prob(*target_null_share, "target_null_share");
  if (behavior_count == 0 || model_count == 0 || filters_per_model == 0 || days == 0) {
    throw Error(ErrorCode::InvalidArgument, "counts must be positive");
  }
  if (attr_count_min == 0 || attr_count_min > attr_count_max || attr_count_max > kPoolSize) {
    throw Error(ErrorCode::InvalidArgument, "attr_count range must lie in [1, " + std::to_string(kPoolSize) + "]");
  }
  if (!(events_per_day >= 0.0) || !(popularity_exponent >= 0.0) || day_ms <= 0) {
    throw Error(ErrorCode::InvalidArgument, "rates must be non-negative");
  }
}

nlohmann::json WorkloadParams::to_json() const {
  return {{"seed", seed},
          {"behavior_count", behavior_count},
          {"attr_count_min", attr_count_min},
          {"attr_count_max", attr_count_max},
          {"model_count", model_count},
          {"filters_per_model", filters_per_model},
          {"overlap_prob", overlap_prob},
          {"days", days},
          {"events_per_day", events_per_day},
          {"popularity_exponent", popularity_exponent},
          {"drift_rate", drift_rate},
          {"target_null_share", target_null_share ? nlohmann::json(*target_null_share) : nlohmann::json(nullptr)},
          {"start_ms", start_ms},
          {"day_ms", day_ms}};
}

WorkloadParams WorkloadParams::from_json(const nlohmann::json& j) {
  WorkloadParams p;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", p.seed);
  get("behavior_count", p.behavior_count);
  get("attr_count_min", p.attr_count_min);
  get("attr_count_max", p.attr_count_max);
  get("model_count", p.model_count);
  get("filters_per_model", p.filters_per_model);
  get("overlap_prob", p.overlap_prob);
  get("days", p.days);
  get("events_per_day", p.events_per_day);
  get("popularity_exponent", p.popularity_exponent);
  get("drift_rate", p.drift_rate);
  if (j.contains("target_null_share")) {
    const auto& t = j.at("target_null_share");
    p.target_null_share = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
  }
  get("start_ms", p.start_ms);
  get("day_ms", p.day_ms);
  return p;
}

std::vector<BehaviorEvent> Workload::day(std::size_t d) const {
  if (d >= day_end.size()) throw Error(ErrorCode::InvalidArgument, "day " + std::to_string(d) + " out of range");
  const auto lo = d == 0 ? 0 : day_end[d - 1];
  return {events.begin() + static_cast<std::ptrdiff_t>(lo), events.begin() + static_cast<std::ptrdiff_t>(day_end[d])};
}

std::int64_t Workload::day_start_ms(std::size_t d, const WorkloadParams& params) const {
  return params.start_ms + static_cast<std::int64_t>(d) * params.day_ms;
}

Workload generate(const WorkloadParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  Workload w;

  // Behaviors: attribute count k, then k distinct pool names with at least
  // one categorical attribute to partition on.
  std::vector<std::size_t> categorical, plain;
  for (std::size_t i = 0; i < kPoolSize; ++i) (kPool[i].domain ? categorical : plain).push_back(i);
  std::vector<BehaviorPlan> plans(params.behavior_count);
  std::uniform_int_distribution<std::size_t> k_dist(params.attr_count_min, params.attr_count_max);
  for (std::size_t b = 0; b < params.behavior_count; ++b) {
    auto& plan = plans[b];
    const auto k = k_dist(rng);
    plan.partition = categorical[std::uniform_int_distribution<std::size_t>(0, categorical.size() - 1)(rng)];
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < kPoolSize; ++i) {
      if (i != plan.partition) rest.push_back(i);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    plan.attrs.push_back(plan.partition);
    plan.attrs.insert(plan.attrs.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k - 1));
    std::sort(plan.attrs.begin(), plan.attrs.end());

    BehaviorType def;
    def.name = std::string(kBehaviorNames[b % std::size(kBehaviorNames)]);
    if (b >= std::size(kBehaviorNames)) def.name += "_" + std::to_string(b / std::size(kBehaviorNames));
    for (auto i : plan.attrs) def.attrs.push_back({kPool[i].name, kPool[i].kind, kPool[i].width});
    w.catalog.register_behavior(std::move(def));
  }

  // Power-law popularity by behavior rank.
  std::vector<double> popularity(params.behavior_count);
  for (std::size_t b = 0; b < params.behavior_count; ++b) {
    popularity[b] = 1.0 / std::pow(static_cast<double>(b + 1), params.popularity_exponent);
  }

  // Filters: each model asks for filters_per_model behaviors. With
  // probability overlap_prob a filter reuses an existing filter's predicate
  // space (same predicate, a narrower conjunction, or no predicate at all);
  // otherwise it claims a fresh partition value, disjoint from every other.
  struct Draft {
    std::size_t behavior;
    std::vector<std::pair<std::size_t, std::size_t>> predicates;  // (pool attr, category)
    bool match_all = false;
  };
  // Filters per behavior follow popularity by largest remainder, so hot
  // behaviors reliably attract most filters.
  const std::size_t filter_total = params.model_count * params.filters_per_model;
  const double pop_sum = std::accumulate(popularity.begin(), popularity.end(), 0.0);
  std::vector<std::size_t> quota(params.behavior_count);
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < params.behavior_count; ++b) {
    const double exact = static_cast<double>(filter_total) * popularity[b] / pop_sum;
    quota[b] = static_cast<std::size_t>(exact);
    assigned += quota[b];
    remainder.emplace_back(-(exact - static_cast<double>(quota[b])), b);
  }
  std::sort(remainder.begin(), remainder.end());
  for (std::size_t i = 0; assigned < filter_total; ++i, ++assigned) ++quota[remainder[i % remainder.size()].second];
  std::vector<std::size_t> owners;
  for (std::size_t b = 0; b < params.behavior_count; ++b) owners.insert(owners.end(), quota[b], b);
  std::shuffle(owners.begin(), owners.end(), rng);

  std::vector<Draft> drafts;
  std::vector<std::vector<std::size_t>> drafts_of(params.behavior_count);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> roots_of(params.behavior_count);  // (draft, members)
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t m = 0; m < params.model_count; ++m) {
    for (std::size_t j = 0; j < params.filters_per_model; ++j) {
      Draft d;
      d.behavior = owners[m * params.filters_per_model + j];
      auto& plan = plans[d.behavior];
      auto& roots = roots_of[d.behavior];
      // A fraction 1 - p of each behavior's filters open a new cluster,
      // spread evenly over its filters.
      const auto nth = drafts_of[d.behavior].size() + 1;
      const auto target_roots = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(nth) * (1.0 - params.overlap_prob))));
      if (roots.size() >= target_roots) {
        const double r = unit(rng);
        if (r < 0.05) {
          d.match_all = true;
        } else {
          // Join the smallest cluster so cluster sizes stay near 1 / (1 - p).
          auto root = std::min_element(roots.begin(), roots.end(),
                                       [](const auto& x, const auto& y) { return x.second < y.second; });
          ++root->second;
          d.predicates = drafts[root->first].predicates;
          if (r < kNarrowShare) {
            std::vector<std::size_t> extra;
            for (auto a : plan.attrs) {
              if (kPool[a].domain && a != plan.partition) extra.push_back(a);
            }
            if (!extra.empty()) {
              const auto a = extra[std::uniform_int_distribution<std::size_t>(0, extra.size() - 1)(rng)];
              d.predicates.emplace_back(a, std::uniform_int_distribution<std::size_t>(0, kPool[a].domain - 1)(rng));
            }
          }
        }
      } else {
        d.predicates.emplace_back(plan.partition, plan.next_partition_value++);
        roots.emplace_back(drafts.size(), 1);
      }
      drafts_of[d.behavior].push_back(drafts.size());
      drafts.push_back(std::move(d));
    }
  }
  for (auto& plan : plans) {
    plan.partition_domain = std::max(kPool[plan.partition].domain, plan.next_partition_value + 2);
  }

  // Required-attribute counts. With a null-share target, counts scale with
  // each behavior's k by a factor found by bisection on the expected row mix.
  std::vector<std::size_t> required_count(drafts.size());
  {
    std::set<std::size_t> names;
    for (const auto& plan : plans) names.insert(plan.attrs.begin(), plan.attrs.end());
    const auto columns = static_cast<double>(names.size());
    std::vector<double> jitter(drafts.size()), weight(drafts.size());
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      const auto& d = drafts[i];
      double selectivity = 1.0;
      for (const auto& [a, c] : d.predicates) {
        selectivity /= static_cast<double>(a == plans[d.behavior].partition ? plans[d.behavior].partition_domain
                                                                            : kPool[a].domain);
      }
      weight[i] = popularity[d.behavior] * selectivity;
      jitter[i] = unit(rng) - 0.5;
    }
    auto count_at = [&](double theta, std::size_t i) {
      const auto k = static_cast<double>(plans[drafts[i].behavior].attrs.size());
      return static_cast<std::size_t>(std::clamp(std::round(theta * k + jitter[i]), 1.0, k));
    };
    if (params.target_null_share) {
      auto share = [&](double theta) {
        double nulls = 0, total = 0;
        for (std::size_t i = 0; i < drafts.size(); ++i) {
          nulls += weight[i] * (columns - static_cast<double>(count_at(theta, i))) / columns;
          total += weight[i];
        }
        return total > 0 ? nulls / total : 0.0;
      };
      double lo = 0.0, hi = 1.5;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (share(mid) > *params.target_null_share ? lo : hi) = mid;
      }
      for (std::size_t i = 0; i < drafts.size(); ++i) required_count[i] = count_at(hi, i);
    } else {
      for (std::size_t i = 0; i < drafts.size(); ++i) {
        const auto k = plans[drafts[i].behavior].attrs.size();
        required_count[i] = std::uniform_int_distribution<std::size_t>((k + 1) / 2, k)(rng);
      }
    }
  }

  for (std::size_t di = 0; di < drafts.size(); ++di) {
    const auto& d = drafts[di];
    const auto& plan = plans[d.behavior];
    const auto bid = static_cast<BehaviorId>(d.behavior);
    Filter f;
    f.behavior = bid;
    for (const auto& [a, c] : d.predicates) f.predicates.push_back({kPool[a].name, category(kPool[a], c)});

    // Feature function first; its attribute must be required.
    std::vector<std::size_t> numeric;
    for (auto a : plan.attrs) {
      if (kPool[a].kind == AttrKind::int64 || kPool[a].kind == AttrKind::float64) numeric.push_back(a);
    }
    Feature feat;
    feat.func = static_cast<FeatureFunc>(std::uniform_int_distribution<int>(0, 5)(rng));
    auto needs_numeric = [&] {
      return feat.func == FeatureFunc::sum || feat.func == FeatureFunc::avg || feat.func == FeatureFunc::max;
    };
    if (needs_numeric() && numeric.empty()) feat.func = FeatureFunc::latest;
    std::optional<std::size_t> feat_attr;
    if (feat.func != FeatureFunc::count) {
      const auto& choices = needs_numeric() ? numeric : plan.attrs;
      feat_attr = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
      feat.attr = kPool[*feat_attr].name;
    }

    const auto n_required = required_count[di];
    std::vector<std::size_t> shuffled = plan.attrs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::set<std::size_t> required(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_required));
    if (feat_attr && !required.count(*feat_attr)) {
      required.erase(required.begin());
      required.insert(*feat_attr);
    }
    for (auto a : required) f.required_attrs.push_back(kPool[a].name);

    feat.filter = w.catalog.register_filter(std::move(f));
    constexpr std::int64_t kHour = 3'600'000;
    constexpr std::int64_t kWindows[] = {kHour, 6 * kHour, 24 * kHour, 72 * kHour, 168 * kHour, 336 * kHour};
    feat.window_ms = kWindows[std::uniform_int_distribution<std::size_t>(0, std::size(kWindows) - 1)(rng)];
    w.catalog.register_feature(std::move(feat));
  }
  w.catalog.freeze();

  // Category weights per (behavior, categorical attribute); drift redraws a
  // behavior's weights, shifting which filters fire and how much they overlap.
  std::vector<std::map<std::size_t, std::vector<double>>> weights(params.behavior_count);
  auto draw_weights = [&](std::size_t b) {
    for (auto a : plans[b].attrs) {
      if (!kPool[a].domain) continue;
      const auto n = a == plans[b].partition ? plans[b].partition_domain : kPool[a].domain;
      // The partition stays uniform; drift moves the secondary attributes.
      weights[b][a] = a == plans[b].partition ? std::vector<double>(n, 1.0) : random_weights(rng, n);
    }
  };
  for (std::size_t b = 0; b < params.behavior_count; ++b) draw_weights(b);

  std::uint64_t seq = 0;
  for (std::size_t day = 0; day < params.days; ++day) {
    if (day > 0) {
      for (std::size_t b = 0; b < params.behavior_count; ++b) {
        if (unit(rng) < params.drift_rate) draw_weights(b);
      }
    }
    const auto day_start = params.start_ms + static_cast<std::int64_t>(day) * params.day_ms;
    std::vector<BehaviorEvent> today;
    for (std::size_t b = 0; b < params.behavior_count; ++b) {
      std::poisson_distribution<std::uint64_t> arrivals(params.events_per_day * popularity[b] / pop_sum);
      const auto n = arrivals(rng);
      const auto& plan = plans[b];
      for (std::uint64_t i = 0; i < n; ++i) {
        BehaviorEvent e;
        e.behavior = static_cast<BehaviorId>(b);
        e.timestamp_ms = day_start + std::uniform_int_distribution<std::int64_t>(0, params.day_ms - 1)(rng);
        for (auto a : plan.attrs) {
          const auto& def = kPool[a];
          Value v;
          if (def.domain) {
            const auto& wts = weights[b][a];
            v = category(def, std::discrete_distribution<std::size_t>(wts.begin(), wts.end())(rng));
          } else if (def.kind == AttrKind::int64) {
            const std::int64_t hi = def.width >= 8 ? 1'000'000'000 : 10'000;
            v = std::uniform_int_distribution<std::int64_t>(0, hi)(rng);
          } else if (def.kind == AttrKind::float64) {
            v = std::round(std::uniform_real_distribution<double>(0.0, 1000.0)(rng) * 100.0) / 100.0;
          } else if (def.kind == AttrKind::boolean) {
            v = unit(rng) < 0.5;
          } else {
            v = std::string("t") + std::to_string(std::uniform_int_distribution<int>(0, 99999)(rng));
          }
          e.values.emplace(def.name, std::move(v));
        }
        today.push_back(std::move(e));
      }
    }
    std::stable_sort(today.begin(), today.end(), [](const BehaviorEvent& a, const BehaviorEvent& b) {
      return std::tie(a.timestamp_ms, a.behavior) < std::tie(b.timestamp_ms, b.behavior);
    });
    for (auto& e : today) {
      e.seq_id = seq++;
      w.events.push_back(std::move(e));
    }
    w.day_end.push_back(w.events.size());
  }
  return w;
}

nlohmann::json WorkloadStats::to_json() const {
  return {{"events", events},         {"logged_events", logged_events}, {"rows", rows},
          {"redundancy", redundancy}, {"null_share", null_share},       {"rows_with_null", rows_with_null}};
}

WorkloadStats calibrate_stats(const std::vector<BehaviorEvent>& stream, const LogStore& baseline) {
  WorkloadStats s;
  s.events = stream.size();
  std::set<std::uint64_t> logged;
  std::uint64_t cells = 0, nulls = 0, null_rows = 0;
  for (const auto& [sid, shard] : baseline.shards()) {
    for (const auto& r : shard.rows()) {
      ++s.rows;
      logged.insert(r.seq_id);
      const auto n = static_cast<std::uint64_t>(std::count_if(r.cells.begin(), r.cells.end(), is_null));
      cells += r.cells.size();
      nulls += n;
      if (n > 0) ++null_rows;
    }
  }
  s.logged_events = logged.size();
  if (s.rows > 0) {
    s.redundancy = 1.0 - static_cast<double>(s.logged_events) / static_cast<double>(s.rows);
    s.rows_with_null = static_cast<double>(null_rows) / static_cast<double>(s.rows);
  }
  if (cells > 0) s.null_share = static_cast<double>(nulls) / static_cast<double>(cells);
  return s;
}

}  // namespace evlog
