#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/featcomp.hpp"
#include "evlog/ingest.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"
#include "evlog/merge_opt.hpp"
#include "evlog/metadata.hpp"
#include "evlog/updater.hpp"
#include "evlog/workload.hpp"

namespace evlog {

/// Bytes of the optimized layout's side files (merge config + mapping).
struct ConfigBytes {
  std::uint64_t merge_config = 0;
  std::uint64_t mapping = 0;
  std::uint64_t total() const noexcept { return merge_config + mapping; }
};

/// Largest stored seq_id, if any row exists.
std::optional<std::uint64_t> last_seq(const LogStore& store);

std::string merge_config_text(const StorageLayout& layout);
std::string mapping_text(const StorageLayout& layout, const Catalog& catalog);
ConfigBytes config_bytes(const StorageLayout& layout, const Catalog& catalog);

/// 1 - (optimized shards + config files) / baseline shards.
double compression_ratio(const SizeReport& baseline, const SizeReport& optimized, const ConfigBytes& config);

struct FeatureMismatch {
  FeatureId feature = 0;
  std::int64_t now_ms = 0;
  std::string expected;
  std::string actual;
};

struct VerifyReport {
  std::uint64_t checks = 0;
  std::vector<FeatureMismatch> mismatches;
  bool ok() const noexcept { return mismatches.empty(); }
  nlohmann::json to_json() const;
};

/// Every feature at every `now`, reference log against candidate log.
VerifyReport verify_features(const Catalog& catalog, const StorageLayout& ref_layout, const LogStore& ref,
                             const StorageLayout& cand_layout, const LogStore& cand,
                             const std::vector<std::int64_t>& nows);

/// Evaluation instants: each day boundary plus a few seeded points in between.
std::vector<std::int64_t> verification_times(const WorkloadParams& params, std::size_t days, std::size_t per_day = 3);

struct PipelineOptions {
  bool vhan = true;
  bool check_rebuild = false;  // also build from scratch and compare bytes
};

/// Live state of both logs across days.
struct PipelineState {
  Catalog catalog;
  StorageLayout baseline_layout;
  StorageLayout layout;  // current optimized layout
  LogStore baseline;
  LogStore optimized;

  static PipelineState fresh(const Catalog& catalog, bool vhan = true);
};

struct DayReport {
  std::size_t day = 0;
  std::uint64_t events = 0;
  SizeReport baseline;
  SizeReport before;  // optimized log after ingest, before re-optimizing
  SizeReport after;
  ConfigBytes config;
  double compression_ratio = 0.0;
  bool plan_empty = true;
  std::size_t behaviors_changed = 0;
  std::size_t behaviors_total = 0;  // behaviors with filters
  IOStats update;
  IOStats rebuild;
  std::optional<bool> rebuild_identical;
  std::vector<MergeIteration> merge_trace;  // all behaviors, in order
  std::map<BehaviorId, std::size_t> merge_iterations;  // per behavior
  double ingest_ms = 0, profile_ms = 0, optimize_ms = 0, update_ms = 0;

  nlohmann::json to_json() const;
};

/// Ingest one day into both logs, then profile, optimize and update the
/// optimized log in place.
DayReport run_day(PipelineState& state, std::size_t day, const std::vector<BehaviorEvent>& events,
                  const PipelineOptions& options = {});

/// Re-optimizes from the current profile and returns the new layout.
StorageLayout optimize(const ProfileMetadata& meta, const Catalog& catalog, bool vhan,
                       std::vector<MergeIteration>* trace = nullptr,
                       std::map<BehaviorId, std::size_t>* iterations = nullptr);

// Workspace on disk: catalog.json, params.json, events.ndjson, state.json,
// baseline/ and optimized/ shard directories plus the optimized side files.
namespace workspace {

std::filesystem::path baseline_dir(const std::filesystem::path& ws);
std::filesystem::path optimized_dir(const std::filesystem::path& ws);

void init(const std::filesystem::path& ws, const Workload& workload, const WorkloadParams& params);
WorkloadParams load_params(const std::filesystem::path& ws);
Catalog load_catalog(const std::filesystem::path& ws);
std::vector<BehaviorEvent> load_events(const std::filesystem::path& ws, const Catalog& catalog);
std::vector<BehaviorEvent> day_events(const std::vector<BehaviorEvent>& all, const WorkloadParams& params,
                                      std::size_t day);

/// Layout of the optimized log (from its side files), or the initial one.
StorageLayout load_layout(const std::filesystem::path& ws, const Catalog& catalog);
void save_layout(const std::filesystem::path& ws, const StorageLayout& layout, const Catalog& catalog);

PipelineState load_state(const std::filesystem::path& ws);
void save_state(const std::filesystem::path& ws, const PipelineState& state);

/// The next day that has not been ingested.
std::size_t next_day(const std::filesystem::path& ws);
void set_next_day(const std::filesystem::path& ws, std::size_t day);

DayReport run_pipeline(const std::filesystem::path& ws, std::size_t day, const PipelineOptions& options = {});

}  // namespace workspace

}  // namespace evlog
