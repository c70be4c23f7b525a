#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/logstore.hpp"

namespace evlog {

struct FilterProfile {
  std::vector<std::uint64_t> events;  // sorted seq_ids, E(f)
  std::vector<std::string> attrs;     // A(f), catalog order
  std::uint64_t attr_bytes = 0;       // Σ declared widths of A(f)

  bool operator==(const FilterProfile&) const = default;
};

/// Optimizer input collected from a log.
struct ProfileMetadata {
  std::map<FilterId, FilterProfile> filters;
  std::map<BehaviorId, std::vector<FilterId>> behaviors;
  std::uint64_t addr_bytes = kDefaultAddrBytes;
  std::uint64_t shard_overhead = kShardMetadataBytes;

  const FilterProfile& filter(FilterId id) const;

  nlohmann::json to_json() const;
  static ProfileMetadata from_json(const nlohmann::json& j);

  bool operator==(const ProfileMetadata&) const = default;
};

/// Profile with every E(f) empty, A(f) from the catalog.
ProfileMetadata empty_profile(const Catalog& catalog);

}  // namespace evlog
