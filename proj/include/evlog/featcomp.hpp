#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"

namespace evlog {

struct RetrievedRow {
  std::uint64_t seq_id = 0;
  std::int64_t timestamp_ms = 0;
  std::map<std::string, Value> values;  // the filter's required attributes

  bool operator==(const RetrievedRow&) const = default;
};

/// Result of a feature function. `empty` means no rows to aggregate.
struct FeatureValue {
  enum class Kind : std::uint8_t { empty, scalar, sequence };
  Kind kind = Kind::empty;
  Value scalar;
  std::vector<Value> sequence;

  static FeatureValue make_empty() { return {}; }
  static FeatureValue of(Value v) { return {Kind::scalar, std::move(v), {}}; }
  static FeatureValue of_sequence(std::vector<Value> vs) { return {Kind::sequence, {}, std::move(vs)}; }

  std::string to_display() const;
  nlohmann::json to_json() const;

  bool operator==(const FeatureValue&) const = default;
};

/// Rows of the feature's filter with now - window <= ts < now, by seq_id.
std::vector<RetrievedRow> retrieve(const Feature& feature, const Catalog& catalog, const StorageLayout& layout,
                                   const LogStore& store, std::int64_t now_ms);
std::vector<RetrievedRow> retrieve(FeatureId feature, const Catalog& catalog, const StorageLayout& layout,
                                   const LogStore& store, std::int64_t now_ms);

/// Applies the feature function. Rows must be in seq_id order.
FeatureValue compute(const Feature& feature, const Catalog& catalog, const std::vector<RetrievedRow>& rows);

}  // namespace evlog
