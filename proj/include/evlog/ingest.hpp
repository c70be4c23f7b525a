#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"

namespace evlog {

struct BehaviorEvent {
  std::uint64_t seq_id = 0;
  BehaviorId behavior = 0;
  std::int64_t timestamp_ms = 0;
  std::map<std::string, Value> values;

  bool operator==(const BehaviorEvent&) const = default;
};

struct FilterMatch {
  FilterId filter = kNullFilter;
  std::vector<std::string> required;

  bool operator==(const FilterMatch&) const = default;
};

/// Throws UnknownBehavior, MissingAttribute, or TypeMismatch when a value's
/// kind differs from the declaration.
void validate_event(const BehaviorEvent& event, const Catalog& catalog);

/// Filters of the event's behavior whose predicates all hold, ascending id.
std::vector<FilterMatch> match_filters(const BehaviorEvent& event, const Catalog& catalog);

/// Rows the layout stores for one event (no store access).
std::vector<EventRow> rows_for_event(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout);

/// One row per matched filter into the unified file. Layout must be unified.
std::size_t write_event_baseline(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                                 LogStore& store);
/// One row per feature group with a matched member.
std::size_t write_event_optimized(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                                  LogStore& store);
/// Dispatches on the layout kind.
std::size_t write_event(const BehaviorEvent& event, const Catalog& catalog, const StorageLayout& layout,
                        LogStore& store);

nlohmann::json event_to_json(const BehaviorEvent& event);
BehaviorEvent event_from_json(const nlohmann::json& j, const Catalog& catalog);

/// Newline-delimited JSON, one event per line.
void write_events(const std::filesystem::path& path, const std::vector<BehaviorEvent>& events, bool append = false);
/// Also checks seq_ids increase and timestamps never decrease.
std::vector<BehaviorEvent> read_events(const std::filesystem::path& path, const Catalog& catalog);

}  // namespace evlog
