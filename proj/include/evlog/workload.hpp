#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/ingest.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"

namespace evlog {

struct WorkloadParams {
  std::uint64_t seed = 0;
  std::size_t behavior_count = 30;
  std::size_t attr_count_min = 5;
  std::size_t attr_count_max = 10;
  std::size_t model_count = 20;
  std::size_t filters_per_model = 2;
  double overlap_prob = 0.8;
  std::size_t days = 14;
  double events_per_day = 360.0;  // mean over all behaviors
  double popularity_exponent = 1.3;
  double drift_rate = 0.1;        // per behavior and day
  /// When set, required-attribute counts are scaled so the baseline's
  /// expected null share hits this value; otherwise they are uniform in [k/2, k].
  std::optional<double> target_null_share = 0.509;
  std::int64_t start_ms = 1'700'000'000'000;
  std::int64_t day_ms = 86'400'000;

  /// Throws InvalidArgument when a probability or count is out of range.
  void validate() const;
  nlohmann::json to_json() const;
  static WorkloadParams from_json(const nlohmann::json& j);
};

struct Workload {
  Catalog catalog;                     // frozen
  std::vector<BehaviorEvent> events;   // seq_id order
  std::vector<std::size_t> day_end;    // events[day_end[d-1] .. day_end[d]) fall on day d

  std::vector<BehaviorEvent> day(std::size_t d) const;
  std::int64_t day_start_ms(std::size_t d, const WorkloadParams& params) const;
};

Workload generate(const WorkloadParams& params);

struct WorkloadStats {
  std::uint64_t events = 0;         // in the stream
  std::uint64_t logged_events = 0;  // with at least one row
  std::uint64_t rows = 0;
  double redundancy = 0.0;          // 1 - logged_events / rows
  double null_share = 0.0;          // null cells / all cells
  double rows_with_null = 0.0;      // fraction of rows with a null cell

  nlohmann::json to_json() const;
};

/// Measured over a baseline (unified) log.
WorkloadStats calibrate_stats(const std::vector<BehaviorEvent>& stream, const LogStore& baseline);

}  // namespace evlog
