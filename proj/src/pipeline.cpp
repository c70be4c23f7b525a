#include "evlog/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "evlog/error.hpp"
#include "evlog/profiler.hpp"

namespace evlog {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

nlohmann::json size_json(const SizeReport& s) {
  return {{"data_bytes", s.data_bytes},
          {"index_address_bytes", s.index_address_bytes},
          {"metadata_bytes", s.metadata_bytes},
          {"total_bytes", s.total_bytes}};
}

}  // namespace

std::optional<std::uint64_t> last_seq(const LogStore& store) {
  std::optional<std::uint64_t> out;
  for (const auto& [id, shard] : store.shards()) {
    for (const auto& r : shard.rows()) out = std::max(out.value_or(0), r.seq_id);
  }
  return out;
}

std::string merge_config_text(const StorageLayout& layout) { return layout.merge().to_json().dump(); }

std::string mapping_text(const StorageLayout& layout, const Catalog& catalog) {
  auto j = to_json(layout.split(), layout.mapping(), catalog);
  j["kind"] = std::string(to_string(layout.kind()));
  return j.dump();
}

ConfigBytes config_bytes(const StorageLayout& layout, const Catalog& catalog) {
  return {merge_config_text(layout).size(), mapping_text(layout, catalog).size()};
}

double compression_ratio(const SizeReport& baseline, const SizeReport& optimized, const ConfigBytes& config) {
  if (baseline.total_bytes == 0) return 0.0;
  return 1.0 - static_cast<double>(optimized.total_bytes + config.total()) / static_cast<double>(baseline.total_bytes);
}

nlohmann::json VerifyReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& m : mismatches) {
    arr.push_back({{"feature", m.feature}, {"now", m.now_ms}, {"expected", m.expected}, {"actual", m.actual}});
  }
  return {{"checks", checks}, {"ok", ok()}, {"mismatches", std::move(arr)}};
}

VerifyReport verify_features(const Catalog& catalog, const StorageLayout& ref_layout, const LogStore& ref,
                             const StorageLayout& cand_layout, const LogStore& cand,
                             const std::vector<std::int64_t>& nows) {
  VerifyReport report;
  for (const auto& [fid, feature] : catalog.features()) {
    for (auto now : nows) {
      const auto expected = compute(feature, catalog, retrieve(feature, catalog, ref_layout, ref, now));
      const auto actual = compute(feature, catalog, retrieve(feature, catalog, cand_layout, cand, now));
      ++report.checks;
      if (!(expected == actual)) report.mismatches.push_back({fid, now, expected.to_display(), actual.to_display()});
    }
  }
  return report;
}

std::vector<std::int64_t> verification_times(const WorkloadParams& params, std::size_t days, std::size_t per_day) {
  std::mt19937_64 rng(params.seed ^ 0x5eedULL);
  std::uniform_int_distribution<std::int64_t> in_day(0, params.day_ms - 1);
  std::vector<std::int64_t> out;
  for (std::size_t d = 0; d <= days; ++d) {
    const auto start = params.start_ms + static_cast<std::int64_t>(d) * params.day_ms;
    out.push_back(start);
    if (d < days) {
      for (std::size_t i = 0; i < per_day; ++i) out.push_back(start + in_day(rng));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PipelineState PipelineState::fresh(const Catalog& catalog, bool vhan) {
  PipelineState s;
  s.catalog = catalog;
  s.baseline_layout = StorageLayout::unified(catalog);
  s.layout = StorageLayout::initial(catalog, vhan);
  s.baseline = s.baseline_layout.make_store();
  s.optimized = s.layout.make_store();
  return s;
}

nlohmann::json DayReport::to_json() const {
  auto trace = nlohmann::json::array();
  for (const auto& it : merge_trace) {
    trace.push_back({{"groups_before", it.groups_before},
                     {"merges", it.merges},
                     {"size_before", it.size_before},
                     {"size_after", it.size_after}});
  }
  auto iterations = nlohmann::json::object();
  for (const auto& [bid, n] : merge_iterations) iterations[std::to_string(bid)] = n;
  nlohmann::json j = {{"day", day},
                      {"events", events},
                      {"baseline", size_json(baseline)},
                      {"optimized_before", size_json(before)},
                      {"optimized_after", size_json(after)},
                      {"config_bytes", {{"merge_config", config.merge_config}, {"mapping", config.mapping}}},
                      {"compression_ratio", compression_ratio},
                      {"plan_empty", plan_empty},
                      {"behaviors_changed", behaviors_changed},
                      {"behaviors_total", behaviors_total},
                      {"update", update.to_json()},
                      {"rebuild", rebuild.to_json()},
                      {"merge_trace", std::move(trace)},
                      {"merge_iterations", iterations},
                      {"timings_ms",
                       {{"ingest", ingest_ms}, {"profile", profile_ms}, {"optimize", optimize_ms}, {"update", update_ms}}}};
  if (rebuild_identical) j["rebuild_identical"] = *rebuild_identical;
  return j;
}

StorageLayout optimize(const ProfileMetadata& meta, const Catalog& catalog, bool vhan,
                       std::vector<MergeIteration>* trace, std::map<BehaviorId, std::size_t>* iterations) {
  std::map<BehaviorId, std::vector<std::vector<FilterId>>> groups;
  for (auto& [bid, result] : merge_all(meta, catalog)) {
    if (trace) trace->insert(trace->end(), result.trace.begin(), result.trace.end());
    if (iterations) (*iterations)[bid] = result.trace.size();
    for (auto& g : result.groups) groups[bid].push_back(std::move(g.members));
  }
  return StorageLayout::optimized(catalog, groups, vhan);
}

DayReport run_day(PipelineState& state, std::size_t day, const std::vector<BehaviorEvent>& events,
                  const PipelineOptions& options) {
  DayReport report;
  report.day = day;
  report.events = events.size();
  const auto& catalog = state.catalog;

  auto t = std::chrono::steady_clock::now();
  for (const auto& e : events) {
    write_event_baseline(e, catalog, state.baseline_layout, state.baseline);
    write_event_optimized(e, catalog, state.layout, state.optimized);
  }
  state.optimized.canonicalize();
  report.ingest_ms = elapsed_ms(t);
  report.before = state.optimized.measure_sizes();

  t = std::chrono::steady_clock::now();
  const auto meta = profile(state.optimized, state.layout, catalog);
  report.profile_ms = elapsed_ms(t);

  t = std::chrono::steady_clock::now();
  auto next = optimize(meta, catalog, options.vhan, &report.merge_trace, &report.merge_iterations);
  report.optimize_ms = elapsed_ms(t);

  for (const auto& b : catalog.behaviors()) {
    if (catalog.filters_of(b.id).empty()) continue;
    ++report.behaviors_total;
    if (state.layout.merge().groups.at(b.id) != next.merge().groups.at(b.id)) ++report.behaviors_changed;
  }

  std::optional<LogStore> reference;
  if (options.check_rebuild) {
    auto [fresh, cost] = rebuild_log(state.optimized, state.layout, next, catalog);
    reference = std::move(fresh);
    report.rebuild = cost;
  } else {
    report.rebuild.rows_read = state.optimized.row_count();
  }

  t = std::chrono::steady_clock::now();
  const auto plan = plan_update(state.optimized, state.layout, next, meta, catalog);
  report.plan_empty = plan.empty();
  report.update = execute_plan(plan, state.optimized, state.layout, next, catalog);
  report.update_ms = elapsed_ms(t);
  state.layout = std::move(next);
  if (!options.check_rebuild) report.rebuild.rows_written = state.optimized.row_count();

  if (reference) {
    bool same = reference->shards().size() == state.optimized.shards().size();
    for (const auto& [sid, shard] : state.optimized.shards()) {
      same = same && reference->has_shard(sid) && reference->shard(sid).serialize() == shard.serialize();
    }
    report.rebuild_identical = same;
  }

  report.baseline = state.baseline.measure_sizes();
  report.after = state.optimized.measure_sizes();
  report.config = config_bytes(state.layout, catalog);
  report.compression_ratio = compression_ratio(report.baseline, report.after, report.config);
  return report;
}

namespace workspace {

namespace fs = std::filesystem;

fs::path baseline_dir(const fs::path& ws) { return ws / "baseline"; }
fs::path optimized_dir(const fs::path& ws) { return ws / "optimized"; }

void init(const fs::path& ws, const Workload& workload, const WorkloadParams& params) {
  fs::create_directories(ws);
  workload.catalog.save(ws / "catalog.json");
  write_text(ws / "params.json", params.to_json().dump(2));
  write_events(ws / "events.ndjson", workload.events);
  auto state = PipelineState::fresh(workload.catalog);
  save_state(ws, state);
  set_next_day(ws, 0);
}

WorkloadParams load_params(const fs::path& ws) { return WorkloadParams::from_json(read_json(ws / "params.json")); }

Catalog load_catalog(const fs::path& ws) {
  auto c = Catalog::load(ws / "catalog.json");
  c.freeze();
  return c;
}

std::vector<BehaviorEvent> load_events(const fs::path& ws, const Catalog& catalog) {
  return read_events(ws / "events.ndjson", catalog);
}

std::vector<BehaviorEvent> day_events(const std::vector<BehaviorEvent>& all, const WorkloadParams& params,
                                      std::size_t day) {
  const auto lo = params.start_ms + static_cast<std::int64_t>(day) * params.day_ms;
  const auto hi = lo + params.day_ms;
  std::vector<BehaviorEvent> out;
  for (const auto& e : all) {
    if (e.timestamp_ms >= lo && e.timestamp_ms < hi) out.push_back(e);
  }
  return out;
}

StorageLayout load_layout(const fs::path& ws, const Catalog& catalog) {
  const auto dir = optimized_dir(ws);
  if (!fs::exists(dir / "mapping.json") || !fs::exists(dir / "merge_config.json")) {
    return StorageLayout::initial(catalog);
  }
  auto mapping = read_json(dir / "mapping.json");
  auto [split, attr_map] = split_from_json(mapping, catalog);
  return {parse_layout_kind(mapping.at("kind").get<std::string>()), std::move(split), std::move(attr_map),
          MergeConfig::from_json(read_json(dir / "merge_config.json"))};
}

void save_layout(const fs::path& ws, const StorageLayout& layout, const Catalog& catalog) {
  const auto dir = optimized_dir(ws);
  fs::create_directories(dir);
  write_text(dir / "merge_config.json", merge_config_text(layout));
  write_text(dir / "mapping.json", mapping_text(layout, catalog));
}

PipelineState load_state(const fs::path& ws) {
  PipelineState s;
  s.catalog = load_catalog(ws);
  s.baseline_layout = StorageLayout::unified(s.catalog);
  s.layout = load_layout(ws, s.catalog);
  s.baseline = LogStore::read_dir(baseline_dir(ws), s.baseline_layout.resolver(s.catalog));
  s.optimized = LogStore::read_dir(optimized_dir(ws), s.layout.resolver(s.catalog));
  // Directories written before any rows still need their empty shards.
  for (const auto& [sid, widths] : s.baseline_layout.split().column_widths) {
    if (!s.baseline.has_shard(sid)) s.baseline.create_shard(sid, widths, s.baseline_layout.slot_count(sid));
  }
  for (const auto& [sid, widths] : s.layout.split().column_widths) {
    if (!s.optimized.has_shard(sid)) s.optimized.create_shard(sid, widths, s.layout.slot_count(sid));
  }
  return s;
}

void save_state(const fs::path& ws, const PipelineState& state) {
  state.baseline.write_dir(baseline_dir(ws));
  state.optimized.write_dir(optimized_dir(ws));
  save_layout(ws, state.layout, state.catalog);
}

std::size_t next_day(const fs::path& ws) {
  if (!fs::exists(ws / "state.json")) return 0;
  return read_json(ws / "state.json").at("next_day").get<std::size_t>();
}

void set_next_day(const fs::path& ws, std::size_t day) {
  write_text(ws / "state.json", nlohmann::json{{"next_day", day}}.dump());
}

DayReport run_pipeline(const fs::path& ws, std::size_t day, const PipelineOptions& options) {
  const auto next = next_day(ws);
  if (day > next) {
    throw Error(ErrorCode::InvalidArgument,
                "day " + std::to_string(day) + " comes after unprocessed day " + std::to_string(next));
  }
  auto state = load_state(ws);
  const auto last_base = last_seq(state.baseline), last_opt = last_seq(state.optimized);
  if (last_base != last_opt) throw Error(ErrorCode::InvalidArgument, "baseline and optimized logs hold different events");
  std::vector<BehaviorEvent> events;
  if (day == next) {
    for (auto& e : day_events(load_events(ws, state.catalog), load_params(ws), day)) {
      if (!last_base || e.seq_id > *last_base) events.push_back(std::move(e));
    }
  }
  auto report = run_day(state, day, events, options);
  save_state(ws, state);
  if (day == next) set_next_day(ws, day + 1);
  return report;
}

}  // namespace workspace

}  // namespace evlog
