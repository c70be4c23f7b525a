#include "evlog/featcomp.hpp"

#include <algorithm>
#include <limits>

#include "evlog/error.hpp"
#include "evlog/split_opt.hpp"

namespace evlog {

std::string FeatureValue::to_display() const {
  switch (kind) {
    case Kind::empty: return "<empty>";
    case Kind::scalar: return evlog::to_display(scalar);
    case Kind::sequence: {
      std::string out = "[";
      for (std::size_t i = 0; i < sequence.size(); ++i) {
        if (i) out += ", ";
        out += evlog::to_display(sequence[i]);
      }
      return out + "]";
    }
  }
  return "?";
}

nlohmann::json FeatureValue::to_json() const {
  switch (kind) {
    case Kind::empty: return {{"empty", true}};
    case Kind::scalar: return {{"value", value_to_json(scalar)}};
    case Kind::sequence: {
      auto arr = nlohmann::json::array();
      for (const auto& v : sequence) arr.push_back(value_to_json(v));
      return {{"sequence", std::move(arr)}};
    }
  }
  return nullptr;
}

std::vector<RetrievedRow> retrieve(const Feature& feature, const Catalog& catalog, const StorageLayout& layout,
                                   const LogStore& store, std::int64_t now_ms) {
  const auto& filter = catalog.filter(feature.filter);
  const auto loc = layout.locate(feature.filter, catalog);
  std::vector<RetrievedRow> out;
  if (!store.has_shard(loc.shard)) return out;
  const auto lo = now_ms - feature.window_ms;
  for (const auto* row : store.shard(loc.shard).scan_by_slot(loc.column, feature.filter, lo, now_ms)) {
    auto named = devirtualize(row->cells, row->behavior, catalog, layout.mapping());
    RetrievedRow r{row->seq_id, row->timestamp_ms, {}};
    for (const auto& a : filter.required_attrs) r.values.emplace(a, std::move(named.at(a)));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RetrievedRow> retrieve(FeatureId feature, const Catalog& catalog, const StorageLayout& layout,
                                   const LogStore& store, std::int64_t now_ms) {
  return retrieve(catalog.feature(feature), catalog, layout, store, now_ms);
}

namespace {

const Value& attr_value(const RetrievedRow& r, const std::string& attr) {
  auto it = r.values.find(attr);
  if (it == r.values.end() || is_null(it->second)) {
    throw Error(ErrorCode::TypeMismatch, "row " + std::to_string(r.seq_id) + " lacks '" + attr + "'");
  }
  return it->second;
}

double as_double(const Value& v, const std::string& attr) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorCode::TypeMismatch, "'" + attr + "' is not numeric");
}

}  // namespace

FeatureValue compute(const Feature& feature, const Catalog& catalog, const std::vector<RetrievedRow>& rows) {
  const auto& attr = feature.attr;
  const auto behavior = catalog.filter(feature.filter).behavior;
  const auto kind = feature.func == FeatureFunc::count ? AttrKind::int64 : catalog.attr(behavior, attr).kind;
  const bool numeric = kind == AttrKind::int64 || kind == AttrKind::float64;

  switch (feature.func) {
    case FeatureFunc::count:
      return FeatureValue::of(static_cast<std::int64_t>(rows.size()));
    case FeatureFunc::sum: {
      if (!numeric) throw Error(ErrorCode::TypeMismatch, "sum over '" + attr + "'");
      if (kind == AttrKind::int64) {
        std::int64_t s = 0;
        for (const auto& r : rows) {
          const auto* v = std::get_if<std::int64_t>(&attr_value(r, attr));
          if (!v) throw Error(ErrorCode::TypeMismatch, "'" + attr + "' is not int64");
          if (__builtin_add_overflow(s, *v, &s)) throw Error(ErrorCode::InvalidValue, "int64 sum overflows");
        }
        return FeatureValue::of(s);
      }
      double s = 0.0;
      for (const auto& r : rows) s += as_double(attr_value(r, attr), attr);
      return FeatureValue::of(s);
    }
    case FeatureFunc::avg: {
      if (!numeric) throw Error(ErrorCode::TypeMismatch, "avg over '" + attr + "'");
      if (rows.empty()) return FeatureValue::make_empty();
      double s = 0.0;
      for (const auto& r : rows) s += as_double(attr_value(r, attr), attr);
      return FeatureValue::of(s / static_cast<double>(rows.size()));
    }
    case FeatureFunc::max: {
      if (!numeric) throw Error(ErrorCode::TypeMismatch, "max over '" + attr + "'");
      if (rows.empty()) return FeatureValue::make_empty();
      Value best = attr_value(rows.front(), attr);
      for (const auto& r : rows) {
        const auto& v = attr_value(r, attr);
        const auto* vi = std::get_if<std::int64_t>(&v);
        const auto* bi = std::get_if<std::int64_t>(&best);
        if (vi && bi ? *vi > *bi : as_double(v, attr) > as_double(best, attr)) best = v;
      }
      return FeatureValue::of(best);
    }
    case FeatureFunc::latest: {
      if (rows.empty()) return FeatureValue::make_empty();
      auto it = std::max_element(rows.begin(), rows.end(),
                                 [](const RetrievedRow& a, const RetrievedRow& b) { return a.seq_id < b.seq_id; });
      return FeatureValue::of(attr_value(*it, attr));
    }
    case FeatureFunc::sequence: {
      std::vector<const RetrievedRow*> sorted;
      for (const auto& r : rows) sorted.push_back(&r);
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const RetrievedRow* a, const RetrievedRow* b) { return a->seq_id < b->seq_id; });
      std::vector<Value> out;
      for (const auto* r : sorted) out.push_back(attr_value(*r, attr));
      return FeatureValue::of_sequence(std::move(out));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature function");
}

}  // namespace evlog
