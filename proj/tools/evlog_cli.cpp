// evlog: command-line driver over a workspace directory.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evlog/error.hpp"
#include "evlog/pipeline.hpp"
#include "evlog/profiler.hpp"

using namespace evlog;
namespace fs = std::filesystem;

namespace {

void emit(const nlohmann::json& j, bool pretty) { std::cout << (pretty ? j.dump(2) : j.dump()) << "\n"; }

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return nlohmann::json::parse(in);
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump() << "\n";
}

nlohmann::json sizes_json(const SizeReport& s) {
  return {{"data_bytes", s.data_bytes},
          {"index_address_bytes", s.index_address_bytes},
          {"metadata_bytes", s.metadata_bytes},
          {"total_bytes", s.total_bytes}};
}

fs::path profile_path(const fs::path& ws) { return workspace::optimized_dir(ws) / "profile.json"; }
fs::path pending_path(const fs::path& ws) { return ws / "pending_layout.json"; }

StorageLayout pending_layout(const fs::path& ws, const Catalog& catalog) {
  const auto j = read_json_file(pending_path(ws));
  auto [split, mapping] = split_from_json(j.at("mapping"), catalog);
  return {parse_layout_kind(j.at("mapping").at("kind").get<std::string>()), std::move(split), std::move(mapping),
          MergeConfig::from_json(j.at("merge_config"))};
}

nlohmann::json groups_json(const StorageLayout& layout) {
  auto j = nlohmann::json::object();
  for (const auto& [bid, groups] : layout.merge().groups) j[std::to_string(bid)] = groups;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-log storage engine and layout optimizer"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string ws_arg;
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Indent JSON output");

  auto add_ws = [&](CLI::App* cmd) { cmd->add_option("--ws,-w", ws_arg, "Workspace directory")->required(); };

  // generate
  auto* gen = app.add_subcommand("generate", "Create a workspace with a synthetic catalog and event stream");
  add_ws(gen);
  WorkloadParams params;
  std::string params_file;
  double target = params.target_null_share.value_or(-1);
  gen->add_option("--params", params_file, "JSON file with workload parameters");
  gen->add_option("--seed", params.seed);
  gen->add_option("--behaviors", params.behavior_count);
  gen->add_option("--models", params.model_count);
  gen->add_option("--filters-per-model", params.filters_per_model);
  gen->add_option("--overlap", params.overlap_prob);
  gen->add_option("--days", params.days);
  gen->add_option("--events-per-day", params.events_per_day);
  gen->add_option("--drift", params.drift_rate);
  gen->add_option("--null-share", target, "Target null share; negative disables calibration");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Append workspace events to one log");
  add_ws(ingest);
  std::string mode;
  std::optional<std::size_t> ingest_day;
  ingest->add_option("--mode", mode)->required()->check(CLI::IsMember({"baseline", "optimized"}));
  ingest->add_option("--day", ingest_day, "Only this day (default: all)");

  auto* prof = app.add_subcommand("profile", "Collect optimizer metadata from the optimized log");
  add_ws(prof);

  auto* opt = app.add_subcommand("optimize", "Compute a new layout from the last profile");
  add_ws(opt);
  bool no_vhan = false;
  opt->add_flag("--no-vhan", no_vhan, "Keep physical attribute names");

  auto* upd = app.add_subcommand("update", "Apply the pending layout to the optimized log incrementally");
  add_ws(upd);
  bool check_rebuild = false;
  upd->add_flag("--check-rebuild", check_rebuild, "Also rebuild from scratch and compare bytes");

  auto* comp = app.add_subcommand("compute", "Compute one feature value");
  add_ws(comp);
  FeatureId feature_id = 0;
  std::int64_t now = 0;
  std::string log_name = "optimized";
  comp->add_option("--feature", feature_id)->required();
  comp->add_option("--now", now)->required();
  comp->add_option("--log", log_name)->check(CLI::IsMember({"baseline", "optimized"}));

  auto* stats = app.add_subcommand("stats", "Sizes, compression ratio and workload statistics");
  add_ws(stats);

  auto* ver = app.add_subcommand("verify", "Cross-check features between the baseline and optimized logs");
  add_ws(ver);
  std::string features = "all";
  std::vector<std::int64_t> nows;
  ver->add_option("--features", features, "all, or comma-separated feature ids");
  ver->add_option("--now", nows, "Evaluation instants (default: day boundaries plus seeded points)");

  auto* pipe = app.add_subcommand("pipeline", "Run the daily pipeline: ingest, profile, optimize, update");
  add_ws(pipe);
  std::optional<std::size_t> pipe_day;
  bool pipe_all = false;
  pipe->add_option("--day", pipe_day, "Day to run (default: next day)");
  pipe->add_flag("--all", pipe_all, "Run every remaining day");
  pipe->add_flag("--no-vhan", no_vhan);
  pipe->add_flag("--check-rebuild", check_rebuild);

  auto* bench = app.add_subcommand("bench", "Benchmark on in-memory workloads; one JSON line per seed and day");
  std::size_t bench_seeds = 3;
  bench->add_option("--seeds", bench_seeds);
  bench->add_option("--params", params_file);
  bench->add_option("--days", params.days);
  bench->add_option("--events-per-day", params.events_per_day);
  bench->add_option("--models", params.model_count);
  bench->add_option("--drift", params.drift_rate);
  bench->add_flag("--no-vhan", no_vhan);
  bench->add_flag("--check-rebuild", check_rebuild);

  CLI11_PARSE(app, argc, argv);
  const fs::path ws = ws_arg;

  try {
    if (!params_file.empty()) params = WorkloadParams::from_json(read_json_file(params_file));
    if (gen->parsed() && gen->count("--null-share")) {
      params.target_null_share = target < 0 ? std::nullopt : std::optional<double>(target);
    }

    if (gen->parsed()) {
      const auto w = generate(params);
      workspace::init(ws, w, params);
      emit({{"workspace", ws.string()},
            {"behaviors", w.catalog.behaviors().size()},
            {"filters", w.catalog.filters().size()},
            {"features", w.catalog.features().size()},
            {"events", w.events.size()},
            {"days", params.days}},
           pretty);
      return 0;
    }

    if (ingest->parsed()) {
      auto state = workspace::load_state(ws);
      const auto all = workspace::load_events(ws, state.catalog);
      const auto events = ingest_day ? workspace::day_events(all, workspace::load_params(ws), *ingest_day) : all;
      const bool base = mode == "baseline";
      auto& store = base ? state.baseline : state.optimized;
      const auto& layout = base ? state.baseline_layout : state.layout;
      const auto last = last_seq(store);
      std::uint64_t written = 0, rows = 0;
      for (const auto& e : events) {
        if (last && e.seq_id <= *last) continue;
        rows += write_event(e, state.catalog, layout, store);
        ++written;
      }
      store.canonicalize();
      store.write_dir(base ? workspace::baseline_dir(ws) : workspace::optimized_dir(ws));
      emit({{"mode", mode}, {"events", written}, {"rows", rows}, {"sizes", sizes_json(store.measure_sizes())}},
           pretty);
      return 0;
    }

    if (prof->parsed()) {
      const auto state = workspace::load_state(ws);
      const auto meta = profile(state.optimized, state.layout, state.catalog);
      write_json_file(profile_path(ws), meta.to_json());
      auto counts = nlohmann::json::object();
      for (const auto& [fid, f] : meta.filters) counts[std::to_string(fid)] = f.events.size();
      emit({{"profile", profile_path(ws).string()}, {"events_per_filter", counts}}, pretty);
      return 0;
    }

    if (opt->parsed()) {
      const auto state = workspace::load_state(ws);
      const auto meta = ProfileMetadata::from_json(read_json_file(profile_path(ws)));
      std::vector<MergeIteration> trace;
      const auto next = optimize(meta, state.catalog, !no_vhan, &trace);
      auto mapping = nlohmann::json::parse(mapping_text(next, state.catalog));
      write_json_file(pending_path(ws),
                      {{"mapping", mapping}, {"merge_config", nlohmann::json::parse(merge_config_text(next))}});
      emit({{"layout", to_string(next.kind())},
            {"shards", next.split().column_widths.size()},
            {"groups", groups_json(next)},
            {"merge_iterations", trace.size()}},
           pretty);
      return 0;
    }

    if (upd->parsed()) {
      auto state = workspace::load_state(ws);
      if (!fs::exists(pending_path(ws))) throw Error(ErrorCode::InvalidArgument, "no pending layout; run optimize");
      const auto next = pending_layout(ws, state.catalog);
      const auto meta = profile(state.optimized, state.layout, state.catalog);
      std::optional<LogStore> reference;
      IOStats rebuild;
      if (check_rebuild) {
        auto [fresh, cost] = rebuild_log(state.optimized, state.layout, next, state.catalog);
        reference = std::move(fresh);
        rebuild = cost;
      }
      const auto plan = plan_update(state.optimized, state.layout, next, meta, state.catalog);
      const auto t = std::chrono::steady_clock::now();
      const auto io = execute_plan(plan, state.optimized, state.layout, next, state.catalog);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
      state.layout = next;
      workspace::save_state(ws, state);
      fs::remove(pending_path(ws));
      nlohmann::json out{{"plan_empty", plan.empty()}, {"io", io.to_json()}, {"update_ms", ms},
                         {"sizes", sizes_json(state.optimized.measure_sizes())}};
      if (reference) {
        bool same = reference->shards().size() == state.optimized.shards().size();
        for (const auto& [sid, shard] : state.optimized.shards()) {
          same = same && reference->has_shard(sid) && reference->shard(sid).serialize() == shard.serialize();
        }
        out["rebuild"] = rebuild.to_json();
        out["rebuild_identical"] = same;
      }
      emit(out, pretty);
      return 0;
    }

    if (comp->parsed()) {
      const auto state = workspace::load_state(ws);
      const bool base = log_name == "baseline";
      const auto rows = retrieve(feature_id, state.catalog, base ? state.baseline_layout : state.layout,
                                 base ? state.baseline : state.optimized, now);
      const auto value = compute(state.catalog.feature(feature_id), state.catalog, rows);
      emit({{"feature", feature_id}, {"now", now}, {"log", log_name}, {"rows", rows.size()}, {"value", value.to_json()}},
           pretty);
      return 0;
    }

    if (stats->parsed()) {
      const auto state = workspace::load_state(ws);
      const auto events = workspace::load_events(ws, state.catalog);
      const auto base = state.baseline.measure_sizes();
      const auto optimized = state.optimized.measure_sizes();
      const auto config = config_bytes(state.layout, state.catalog);
      emit({{"next_day", workspace::next_day(ws)},
            {"layout", to_string(state.layout.kind())},
            {"baseline", sizes_json(base)},
            {"optimized", sizes_json(optimized)},
            {"config_bytes", {{"merge_config", config.merge_config}, {"mapping", config.mapping}}},
            {"compression_ratio", compression_ratio(base, optimized, config)},
            {"shards", state.optimized.shards().size()},
            {"workload", calibrate_stats(events, state.baseline).to_json()}},
           pretty);
      return 0;
    }

    if (ver->parsed()) {
      const auto state = workspace::load_state(ws);
      Catalog catalog = state.catalog;
      if (features != "all") {
        std::set<FeatureId> keep;
        std::stringstream ss(features);
        for (std::string item; std::getline(ss, item, ',');) keep.insert(static_cast<FeatureId>(std::stoul(item)));
        Catalog subset;
        for (const auto& b : catalog.behaviors()) subset.register_behavior(b);
        for (const auto& [fid, f] : catalog.filters()) subset.register_filter(f);
        for (auto id : keep) subset.register_feature(catalog.feature(id));
        subset.freeze();
        catalog = std::move(subset);
      }
      if (nows.empty()) {
        const auto p = workspace::load_params(ws);
        nows = verification_times(p, std::max<std::size_t>(workspace::next_day(ws), 1));
      }
      const auto report =
          verify_features(catalog, state.baseline_layout, state.baseline, state.layout, state.optimized, nows);
      emit(report.to_json(), pretty);
      return report.ok() ? 0 : 1;
    }

    if (pipe->parsed()) {
      PipelineOptions options{!no_vhan, check_rebuild};
      const auto total = workspace::load_params(ws).days;
      if (pipe_all) {
        for (auto d = workspace::next_day(ws); d < total; ++d) emit(workspace::run_pipeline(ws, d, options).to_json(), pretty);
      } else {
        emit(workspace::run_pipeline(ws, pipe_day.value_or(workspace::next_day(ws)), options).to_json(), pretty);
      }
      return 0;
    }

    if (bench->parsed()) {
      for (std::size_t s = 0; s < bench_seeds; ++s) {
        auto p = params;
        p.seed = params.seed + s;
        const auto w = generate(p);
        auto state = PipelineState::fresh(w.catalog, !no_vhan);
        for (std::size_t d = 0; d < p.days; ++d) {
          const auto r = run_day(state, d, w.day(d), {!no_vhan, check_rebuild});
          nlohmann::json row{{"seed", p.seed},
                             {"day", d},
                             {"events", r.events},
                             {"baseline_bytes", r.baseline.total_bytes},
                             {"optimized_bytes", r.after.total_bytes},
                             {"config_bytes", r.config.total()},
                             {"compression_ratio", r.compression_ratio},
                             {"behaviors_changed", r.behaviors_changed},
                             {"update_rows_written", r.update.rows_written},
                             {"rebuild_rows_written", r.rebuild.rows_written},
                             {"update_row_ops", r.update.row_ops()},
                             {"rebuild_row_ops", r.rebuild.row_ops()},
                             {"ingest_ms", r.ingest_ms},
                             {"profile_ms", r.profile_ms},
                             {"optimize_ms", r.optimize_ms},
                             {"update_ms", r.update_ms}};
          if (d + 1 == p.days) row["workload"] = calibrate_stats(w.events, state.baseline).to_json();
          emit(row, false);
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  return 0;
}
