#include "evlog/value.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

#include "evlog/error.hpp"

namespace evlog {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::EmptyAttributeList: return "EmptyAttributeList";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::InvalidWidth: return "InvalidWidth";
    case ErrorCode::UnknownBehavior: return "UnknownBehavior";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::UnknownFilter: return "UnknownFilter";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::EmptyRequiredAttrs: return "EmptyRequiredAttrs";
    case ErrorCode::CatalogFrozen: return "CatalogFrozen";
    case ErrorCode::ShardExists: return "ShardExists";
    case ErrorCode::UnknownShard: return "UnknownShard";
    case ErrorCode::InvalidShardSpec: return "InvalidShardSpec";
    case ErrorCode::CellCountMismatch: return "CellCountMismatch";
    case ErrorCode::SlotCountMismatch: return "SlotCountMismatch";
    case ErrorCode::WidthOverflow: return "WidthOverflow";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::ConfigMissingBehavior: return "ConfigMissingBehavior";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::PlanStale: return "PlanStale";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(AttrKind kind) noexcept {
  switch (kind) {
    case AttrKind::int64: return "int64";
    case AttrKind::float64: return "float64";
    case AttrKind::boolean: return "bool";
    case AttrKind::utf8: return "utf8";
  }
  return "?";
}

AttrKind parse_attr_kind(std::string_view text) {
  if (text == "int64") return AttrKind::int64;
  if (text == "float64") return AttrKind::float64;
  if (text == "bool") return AttrKind::boolean;
  if (text == "utf8") return AttrKind::utf8;
  throw Error(ErrorCode::InvalidValue, "unknown attribute kind '" + std::string(text) + "'");
}

std::optional<AttrKind> kind_of(const Value& v) noexcept {
  switch (v.index()) {
    case 1: return AttrKind::int64;
    case 2: return AttrKind::float64;
    case 3: return AttrKind::boolean;
    case 4: return AttrKind::utf8;
    default: return std::nullopt;
  }
}

std::string to_display(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(double x) const { return nlohmann::json(x).dump(); }
    std::string operator()(bool x) const { return x ? "true" : "false"; }
    std::string operator()(const std::string& s) const { return nlohmann::json(s).dump(); }
  };
  return std::visit(Visitor{}, v);
}

bool valid_width(AttrKind kind, std::uint16_t width) noexcept {
  switch (kind) {
    case AttrKind::int64: return width >= 1 && width <= 8;
    case AttrKind::float64: return width == 8;
    case AttrKind::boolean: return width >= 1;
    case AttrKind::utf8: return width >= 1;
  }
  return false;
}

namespace {

bool int_fits(std::int64_t x, std::uint16_t width) noexcept {
  if (width >= 8) return true;
  const int bits = 8 * width;
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return x >= lo && x <= hi;
}

}  // namespace

bool fits_width(const Value& v, std::uint16_t width) noexcept {
  switch (v.index()) {
    case 0: return true;
    case 1: return int_fits(std::get<std::int64_t>(v), width);
    case 2: return width >= 8;
    case 3: return width >= 1;
    case 4: return std::get<std::string>(v).size() <= width;
  }
  return false;
}

void encode_cell(const Value& v, std::uint16_t width, std::span<std::byte> out) {
  if (out.size() != width) throw Error(ErrorCode::InvalidArgument, "cell buffer size mismatch");
  std::fill(out.begin(), out.end(), std::byte{0});
  switch (v.index()) {
    case 0:
      return;
    case 1: {
      const auto x = std::get<std::int64_t>(v);
      if (!int_fits(x, width)) {
        throw Error(ErrorCode::WidthOverflow, std::to_string(x) + " does not fit " + std::to_string(width) + " bytes");
      }
      auto u = static_cast<std::uint64_t>(x);
      for (std::uint16_t i = 0; i < std::min<std::uint16_t>(width, 8); ++i) out[i] = static_cast<std::byte>((u >> (8 * i)) & 0xFF);
      return;
    }
    case 2: {
      if (width < 8) throw Error(ErrorCode::WidthOverflow, "float64 needs at least 8 bytes");
      const auto u = std::bit_cast<std::uint64_t>(std::get<double>(v));
      for (int i = 0; i < 8; ++i) out[i] = static_cast<std::byte>((u >> (8 * i)) & 0xFF);
      return;
    }
    case 3:
      out[0] = std::byte{std::get<bool>(v) ? std::uint8_t{1} : std::uint8_t{0}};
      return;
    case 4: {
      const auto& s = std::get<std::string>(v);
      if (s.size() > width) {
        throw Error(ErrorCode::WidthOverflow,
                    "string of " + std::to_string(s.size()) + " bytes exceeds cell width " + std::to_string(width));
      }
      if (s.find('\0') != std::string::npos) throw Error(ErrorCode::InvalidValue, "string contains NUL");
      std::memcpy(out.data(), s.data(), s.size());
      return;
    }
  }
}

Value decode_cell(std::optional<AttrKind> kind, std::span<const std::byte> in) {
  if (!kind) return std::monostate{};
  switch (*kind) {
    case AttrKind::int64: {
      std::uint64_t u = 0;
      const std::size_t n = std::min<std::size_t>(in.size(), 8);
      for (std::size_t i = 0; i < n; ++i) u |= std::uint64_t(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
      if (n < 8 && n > 0 && (u >> (8 * n - 1)) & 1) u |= ~std::uint64_t{0} << (8 * n);
      return static_cast<std::int64_t>(u);
    }
    case AttrKind::float64: {
      if (in.size() < 8) throw Error(ErrorCode::CorruptFile, "float64 cell narrower than 8 bytes");
      std::uint64_t u = 0;
      for (std::size_t i = 0; i < 8; ++i) u |= std::uint64_t(std::to_integer<std::uint8_t>(in[i])) << (8 * i);
      return std::bit_cast<double>(u);
    }
    case AttrKind::boolean:
      return in.empty() ? false : std::to_integer<std::uint8_t>(in[0]) != 0;
    case AttrKind::utf8: {
      std::size_t n = 0;
      while (n < in.size() && in[n] != std::byte{0}) ++n;
      return std::string(reinterpret_cast<const char*>(in.data()), n);
    }
  }
  return std::monostate{};
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.index()) {
    case 1: return std::get<std::int64_t>(v);
    case 2: return std::get<double>(v);
    case 3: return std::get<bool>(v);
    case 4: return std::get<std::string>(v);
    default: return nullptr;
  }
}

Value value_from_json(const nlohmann::json& j, AttrKind kind) {
  switch (kind) {
    case AttrKind::int64:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      break;
    case AttrKind::float64:
      if (j.is_number()) return j.get<double>();
      break;
    case AttrKind::boolean:
      if (j.is_boolean()) return j.get<bool>();
      break;
    case AttrKind::utf8:
      if (j.is_string()) return j.get<std::string>();
      break;
  }
  throw Error(ErrorCode::InvalidValue, "expected " + std::string(to_string(kind)) + ", got " + j.dump());
}

}  // namespace evlog
