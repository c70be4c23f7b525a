#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evlog/value.hpp"

namespace evlog {

using BehaviorId = std::uint16_t;
/// 16-bit; 0 is the null slot value and never names a filter.
using FilterId = std::uint16_t;
using FeatureId = std::uint32_t;

inline constexpr FilterId kNullFilter = 0;
inline constexpr FeatureId kAutoFeatureId = 0xFFFFFFFFu;

/// Behavior-independent identity fields every row carries.
inline constexpr std::string_view kIdentityFields[] = {"seq_id", "behavior_id", "timestamp"};

struct AttributeDef {
  std::string name;
  AttrKind kind = AttrKind::int64;
  std::uint16_t width_bytes = 8;

  bool operator==(const AttributeDef&) const = default;
};

struct BehaviorType {
  BehaviorId id = 0;  // assigned by the catalog
  std::string name;
  std::vector<AttributeDef> attrs;  // canonical order = declaration order
};

struct Predicate {
  std::string attr;
  Value value;
};

struct Filter {
  FilterId id = kNullFilter;  // assigned by the catalog when left at 0
  BehaviorId behavior = 0;
  std::vector<Predicate> predicates;  // conjunction of equality tests
  std::vector<std::string> required_attrs;
};

enum class FeatureFunc : std::uint8_t { count, sum, avg, max, latest, sequence };

std::string_view to_string(FeatureFunc f) noexcept;
FeatureFunc parse_feature_func(std::string_view text);

struct Feature {
  FeatureId id = kAutoFeatureId;
  FilterId filter = kNullFilter;
  std::int64_t window_ms = 0;
  FeatureFunc func = FeatureFunc::count;
  std::string attr;  // empty for count
};

struct Violation {
  std::string subject;  // e.g. "feature 3"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Declarations shared by every other module. Registration checks the
/// per-object invariants; `validate()` re-checks everything, including the
/// cross-object ones (feature attr ∈ filter's required attrs).
class Catalog {
 public:
  BehaviorId register_behavior(BehaviorType def);
  FilterId register_filter(Filter f);
  FeatureId register_feature(Feature f);

  ValidationReport validate() const;

  /// After freezing, every register_* call throws CatalogFrozen.
  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  const std::vector<BehaviorType>& behaviors() const noexcept { return behaviors_; }
  const std::map<FilterId, Filter>& filters() const noexcept { return filters_; }
  const std::map<FeatureId, Feature>& features() const noexcept { return features_; }

  const BehaviorType& behavior(BehaviorId id) const;
  const Filter& filter(FilterId id) const;
  const Feature& feature(FeatureId id) const;
  std::optional<BehaviorId> find_behavior(std::string_view name) const;

  /// Filters of one behavior in ascending id order.
  const std::vector<FilterId>& filters_of(BehaviorId id) const;

  /// Index of `attr` within the behavior's canonical order, if declared.
  std::optional<std::size_t> attr_index(BehaviorId id, std::string_view attr) const;
  const AttributeDef& attr(BehaviorId id, std::string_view attr) const;

  /// Σ declared widths of the filter's required attributes.
  std::uint64_t required_size(FilterId id) const;

  std::size_t max_attr_count() const noexcept;

  nlohmann::json to_json() const;
  static Catalog from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Catalog load(const std::filesystem::path& path);

 private:
  void check_mutable() const;

  std::vector<BehaviorType> behaviors_;
  std::map<FilterId, Filter> filters_;
  std::map<FeatureId, Feature> features_;
  std::map<BehaviorId, std::vector<FilterId>> filters_by_behavior_;
  FilterId next_filter_ = 1;
  FeatureId next_feature_ = 0;
  bool frozen_ = false;
};

}  // namespace evlog
