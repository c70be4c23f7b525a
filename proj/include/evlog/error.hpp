#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evlog {

enum class ErrorCode {
  DuplicateName,
  EmptyAttributeList,
  InvalidName,
  InvalidWidth,
  UnknownBehavior,
  UnknownAttribute,
  UnknownFilter,
  UnknownFeature,
  EmptyRequiredAttrs,
  CatalogFrozen,
  ShardExists,
  UnknownShard,
  InvalidShardSpec,
  CellCountMismatch,
  SlotCountMismatch,
  WidthOverflow,
  InvalidValue,
  UnknownColumn,
  MissingAttribute,
  ConfigMissingBehavior,
  CorruptIndex,
  CorruptFile,
  TypeMismatch,
  PlanStale,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures surface as this exception; `code()` identifies the
/// contract violation so callers (and tests) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace evlog
