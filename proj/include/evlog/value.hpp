#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace evlog {

enum class AttrKind : std::uint8_t { int64, float64, boolean, utf8 };

std::string_view to_string(AttrKind kind) noexcept;
AttrKind parse_attr_kind(std::string_view text);

/// A single attribute value. `std::monostate` is the null cell, which only
/// the sparse layouts ever store.
using Value = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

inline bool is_null(const Value& v) noexcept { return std::holds_alternative<std::monostate>(v); }

/// Kind of a non-null value; nullopt for null.
std::optional<AttrKind> kind_of(const Value& v) noexcept;

std::string to_display(const Value& v);

/// Fixed-width little-endian cell codec. A null cell is `width` zero bytes;
/// numbers in a wider column are zero-padded after their 8 bytes.
/// Throws WidthOverflow when the value does not fit and InvalidValue when the
/// value cannot round-trip (kind/width combination or embedded NUL).
void encode_cell(const Value& v, std::uint16_t width, std::span<std::byte> out);
Value decode_cell(std::optional<AttrKind> kind, std::span<const std::byte> in);

/// Whether `v` fits `width` bytes under the codec above.
bool fits_width(const Value& v, std::uint16_t width) noexcept;

/// Is `width` a legal declared width for `kind`?
bool valid_width(AttrKind kind, std::uint16_t width) noexcept;

nlohmann::json value_to_json(const Value& v);
/// Interprets `j` as a value of `kind`; throws InvalidValue on mismatch.
Value value_from_json(const nlohmann::json& j, AttrKind kind);

}  // namespace evlog
