#include "evlog/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "evlog/error.hpp"

namespace evlog {

std::string_view to_string(FeatureFunc f) noexcept {
  switch (f) {
    case FeatureFunc::count: return "count";
    case FeatureFunc::sum: return "sum";
    case FeatureFunc::avg: return "avg";
    case FeatureFunc::max: return "max";
    case FeatureFunc::latest: return "latest";
    case FeatureFunc::sequence: return "sequence";
  }
  return "?";
}

FeatureFunc parse_feature_func(std::string_view text) {
  for (auto f : {FeatureFunc::count, FeatureFunc::sum, FeatureFunc::avg, FeatureFunc::max, FeatureFunc::latest,
                 FeatureFunc::sequence}) {
    if (to_string(f) == text) return f;
  }
  throw Error(ErrorCode::InvalidValue, "unknown feature function '" + std::string(text) + "'");
}

namespace {

bool is_reserved(std::string_view name) {
  return std::find(std::begin(kIdentityFields), std::end(kIdentityFields), name) != std::end(kIdentityFields);
}

bool numeric(AttrKind k) { return k == AttrKind::int64 || k == AttrKind::float64; }

}  // namespace

void Catalog::check_mutable() const {
  if (frozen_) throw Error(ErrorCode::CatalogFrozen, "catalog is frozen");
}

BehaviorId Catalog::register_behavior(BehaviorType def) {
  check_mutable();
  if (def.name.empty()) throw Error(ErrorCode::InvalidName, "behavior name is empty");
  if (find_behavior(def.name)) throw Error(ErrorCode::DuplicateName, "behavior '" + def.name + "'");
  if (def.attrs.empty()) throw Error(ErrorCode::EmptyAttributeList, "behavior '" + def.name + "'");
  std::set<std::string> seen;
  for (const auto& a : def.attrs) {
    if (a.name.empty() || is_reserved(a.name)) {
      throw Error(ErrorCode::InvalidName, "attribute name '" + a.name + "' in '" + def.name + "'");
    }
    if (!seen.insert(a.name).second) {
      throw Error(ErrorCode::DuplicateName, "attribute '" + a.name + "' in '" + def.name + "'");
    }
    if (!valid_width(a.kind, a.width_bytes)) {
      throw Error(ErrorCode::InvalidWidth, "attribute '" + a.name + "' width " + std::to_string(a.width_bytes));
    }
  }
  if (behaviors_.size() >= 0xFFFF) throw Error(ErrorCode::InvalidArgument, "too many behaviors");
  def.id = static_cast<BehaviorId>(behaviors_.size());
  behaviors_.push_back(std::move(def));
  filters_by_behavior_[behaviors_.back().id];
  return behaviors_.back().id;
}

FilterId Catalog::register_filter(Filter f) {
  check_mutable();
  if (f.behavior >= behaviors_.size()) {
    throw Error(ErrorCode::UnknownBehavior, "behavior id " + std::to_string(f.behavior));
  }
  const auto& b = behaviors_[f.behavior];
  for (const auto& p : f.predicates) {
    const auto idx = attr_index(f.behavior, p.attr);
    if (!idx) throw Error(ErrorCode::UnknownAttribute, "'" + p.attr + "' in behavior '" + b.name + "'");
    if (kind_of(p.value) != b.attrs[*idx].kind) {
      throw Error(ErrorCode::InvalidValue, "predicate on '" + p.attr + "' has the wrong kind");
    }
  }
  if (f.required_attrs.empty()) throw Error(ErrorCode::EmptyRequiredAttrs, "filter on '" + b.name + "'");
  std::set<std::string> seen;
  for (const auto& r : f.required_attrs) {
    if (!attr_index(f.behavior, r)) throw Error(ErrorCode::UnknownAttribute, "'" + r + "' in behavior '" + b.name + "'");
    if (!seen.insert(r).second) throw Error(ErrorCode::DuplicateName, "required attribute '" + r + "'");
  }
  // Keep required attrs in canonical order so downstream sizes and mappings are deterministic.
  std::sort(f.required_attrs.begin(), f.required_attrs.end(), [&](const auto& x, const auto& y) {
    return *attr_index(f.behavior, x) < *attr_index(f.behavior, y);
  });
  if (f.id == kNullFilter) {
    while (filters_.count(next_filter_)) ++next_filter_;
    if (next_filter_ == kNullFilter) throw Error(ErrorCode::InvalidArgument, "filter id space exhausted");
    f.id = next_filter_++;
  } else if (filters_.count(f.id)) {
    throw Error(ErrorCode::DuplicateName, "filter id " + std::to_string(f.id));
  }
  auto& ids = filters_by_behavior_[f.behavior];
  ids.insert(std::upper_bound(ids.begin(), ids.end(), f.id), f.id);
  const FilterId id = f.id;
  filters_.emplace(id, std::move(f));
  return id;
}

FeatureId Catalog::register_feature(Feature f) {
  check_mutable();
  if (!filters_.count(f.filter)) throw Error(ErrorCode::UnknownFilter, "filter id " + std::to_string(f.filter));
  if (f.id == kAutoFeatureId) {
    while (features_.count(next_feature_)) ++next_feature_;
    f.id = next_feature_++;
  } else if (features_.count(f.id)) {
    throw Error(ErrorCode::DuplicateName, "feature id " + std::to_string(f.id));
  }
  const FeatureId id = f.id;
  features_.emplace(id, std::move(f));
  return id;
}

ValidationReport Catalog::validate() const {
  ValidationReport report;
  auto add = [&](std::string subject, std::string message) {
    report.violations.push_back({std::move(subject), std::move(message)});
  };

  std::set<std::string> behavior_names;
  for (std::size_t i = 0; i < behaviors_.size(); ++i) {
    const auto& b = behaviors_[i];
    const std::string subject = "behavior " + std::to_string(i);
    if (b.id != i) add(subject, "id does not match position");
    if (!behavior_names.insert(b.name).second) add(subject, "duplicate name '" + b.name + "'");
    if (b.attrs.empty()) add(subject, "no attributes");
    std::set<std::string> names;
    for (const auto& a : b.attrs) {
      if (!names.insert(a.name).second) add(subject, "duplicate attribute '" + a.name + "'");
      if (is_reserved(a.name)) add(subject, "reserved attribute name '" + a.name + "'");
      if (!valid_width(a.kind, a.width_bytes)) add(subject, "invalid width for '" + a.name + "'");
    }
  }

  for (const auto& [id, f] : filters_) {
    const std::string subject = "filter " + std::to_string(id);
    if (id == kNullFilter || f.id != id) add(subject, "invalid id");
    if (f.behavior >= behaviors_.size()) {
      add(subject, "unknown behavior " + std::to_string(f.behavior));
      continue;
    }
    const auto& b = behaviors_[f.behavior];
    for (const auto& p : f.predicates) {
      auto it = std::find_if(b.attrs.begin(), b.attrs.end(), [&](const auto& a) { return a.name == p.attr; });
      if (it == b.attrs.end()) {
        add(subject, "predicate on unknown attribute '" + p.attr + "'");
      } else if (kind_of(p.value) != it->kind) {
        add(subject, "predicate kind mismatch on '" + p.attr + "'");
      }
    }
    if (f.required_attrs.empty()) add(subject, "no required attributes");
    std::set<std::string> req;
    for (const auto& r : f.required_attrs) {
      if (!req.insert(r).second) add(subject, "duplicate required attribute '" + r + "'");
      if (std::none_of(b.attrs.begin(), b.attrs.end(), [&](const auto& a) { return a.name == r; })) {
        add(subject, "required attribute '" + r + "' not declared");
      }
    }
  }

  for (const auto& [id, feat] : features_) {
    const std::string subject = "feature " + std::to_string(id);
    auto fit = filters_.find(feat.filter);
    if (fit == filters_.end()) {
      add(subject, "unknown filter " + std::to_string(feat.filter));
      continue;
    }
    if (feat.window_ms <= 0) add(subject, "window must be positive");
    if (feat.func == FeatureFunc::count) continue;
    const auto& f = fit->second;
    if (std::find(f.required_attrs.begin(), f.required_attrs.end(), feat.attr) == f.required_attrs.end()) {
      add(subject, "attribute '" + feat.attr + "' is not required by filter " + std::to_string(f.id));
      continue;
    }
    if (f.behavior < behaviors_.size()) {
      const auto& b = behaviors_[f.behavior];
      auto it = std::find_if(b.attrs.begin(), b.attrs.end(), [&](const auto& a) { return a.name == feat.attr; });
      if (it != b.attrs.end() && (feat.func == FeatureFunc::sum || feat.func == FeatureFunc::avg ||
                                  feat.func == FeatureFunc::max) &&
          !numeric(it->kind)) {
        add(subject, std::string(to_string(feat.func)) + " needs a numeric attribute");
      }
    }
  }
  return report;
}

const BehaviorType& Catalog::behavior(BehaviorId id) const {
  if (id >= behaviors_.size()) throw Error(ErrorCode::UnknownBehavior, "behavior id " + std::to_string(id));
  return behaviors_[id];
}

const Filter& Catalog::filter(FilterId id) const {
  auto it = filters_.find(id);
  if (it == filters_.end()) throw Error(ErrorCode::UnknownFilter, "filter id " + std::to_string(id));
  return it->second;
}

const Feature& Catalog::feature(FeatureId id) const {
  auto it = features_.find(id);
  if (it == features_.end()) throw Error(ErrorCode::UnknownFeature, "feature id " + std::to_string(id));
  return it->second;
}

std::optional<BehaviorId> Catalog::find_behavior(std::string_view name) const {
  for (const auto& b : behaviors_) {
    if (b.name == name) return b.id;
  }
  return std::nullopt;
}

const std::vector<FilterId>& Catalog::filters_of(BehaviorId id) const {
  auto it = filters_by_behavior_.find(id);
  if (it == filters_by_behavior_.end()) throw Error(ErrorCode::UnknownBehavior, "behavior id " + std::to_string(id));
  return it->second;
}

std::optional<std::size_t> Catalog::attr_index(BehaviorId id, std::string_view attr) const {
  const auto& attrs = behavior(id).attrs;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs[i].name == attr) return i;
  }
  return std::nullopt;
}

const AttributeDef& Catalog::attr(BehaviorId id, std::string_view name) const {
  const auto idx = attr_index(id, name);
  if (!idx) throw Error(ErrorCode::UnknownAttribute, "'" + std::string(name) + "'");
  return behaviors_[id].attrs[*idx];
}

std::uint64_t Catalog::required_size(FilterId id) const {
  const auto& f = filter(id);
  std::uint64_t total = 0;
  for (const auto& r : f.required_attrs) total += attr(f.behavior, r).width_bytes;
  return total;
}

std::size_t Catalog::max_attr_count() const noexcept {
  std::size_t m = 0;
  for (const auto& b : behaviors_) m = std::max(m, b.attrs.size());
  return m;
}

nlohmann::json Catalog::to_json() const {
  using nlohmann::json;
  json behaviors = json::array();
  for (const auto& b : behaviors_) {
    json attrs = json::array();
    for (const auto& a : b.attrs) {
      attrs.push_back({{"name", a.name}, {"kind", to_string(a.kind)}, {"width", a.width_bytes}});
    }
    behaviors.push_back({{"id", b.id}, {"name", b.name}, {"attrs", std::move(attrs)}});
  }
  json filters = json::array();
  for (const auto& [id, f] : filters_) {
    json preds = json::array();
    for (const auto& p : f.predicates) preds.push_back({{"attr", p.attr}, {"value", value_to_json(p.value)}});
    filters.push_back({{"id", id}, {"behavior", f.behavior}, {"predicates", std::move(preds)}, {"required", f.required_attrs}});
  }
  json features = json::array();
  for (const auto& [id, feat] : features_) {
    json j = {{"id", id}, {"filter", feat.filter}, {"window_ms", feat.window_ms}, {"func", to_string(feat.func)}};
    if (!feat.attr.empty()) j["attr"] = feat.attr;
    features.push_back(std::move(j));
  }
  return {{"behaviors", std::move(behaviors)}, {"filters", std::move(filters)}, {"features", std::move(features)}};
}

Catalog Catalog::from_json(const nlohmann::json& j) {
  Catalog c;
  try {
    for (const auto& jb : j.at("behaviors")) {
      BehaviorType b;
      b.name = jb.at("name").get<std::string>();
      for (const auto& ja : jb.at("attrs")) {
        b.attrs.push_back({ja.at("name").get<std::string>(), parse_attr_kind(ja.at("kind").get<std::string>()),
                           ja.at("width").get<std::uint16_t>()});
      }
      const auto id = c.register_behavior(std::move(b));
      if (jb.contains("id") && jb.at("id").get<BehaviorId>() != id) {
        throw Error(ErrorCode::InvalidArgument, "behaviors must be listed in id order");
      }
    }
    for (const auto& jf : j.at("filters")) {
      Filter f;
      f.id = jf.value("id", FilterId{0});
      f.behavior = jf.at("behavior").get<BehaviorId>();
      for (const auto& jp : jf.value("predicates", nlohmann::json::array())) {
        const auto name = jp.at("attr").get<std::string>();
        if (f.behavior >= c.behaviors_.size()) {
          throw Error(ErrorCode::UnknownBehavior, "behavior id " + std::to_string(f.behavior));
        }
        const auto idx = c.attr_index(f.behavior, name);
        if (!idx) throw Error(ErrorCode::UnknownAttribute, "'" + name + "'");
        f.predicates.push_back({name, value_from_json(jp.at("value"), c.behaviors_[f.behavior].attrs[*idx].kind)});
      }
      f.required_attrs = jf.at("required").get<std::vector<std::string>>();
      c.register_filter(std::move(f));
    }
    for (const auto& jf : j.value("features", nlohmann::json::array())) {
      Feature feat;
      feat.id = jf.value("id", kAutoFeatureId);
      feat.filter = jf.at("filter").get<FilterId>();
      feat.window_ms = jf.at("window_ms").get<std::int64_t>();
      feat.func = parse_feature_func(jf.at("func").get<std::string>());
      feat.attr = jf.value("attr", std::string{});
      c.register_feature(std::move(feat));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("catalog json: ") + e.what());
  }
  return c;
}

void Catalog::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Catalog Catalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  }
}

}  // namespace evlog
