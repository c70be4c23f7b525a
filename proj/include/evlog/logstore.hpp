#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "evlog/catalog.hpp"
#include "evlog/value.hpp"

namespace evlog {

using ShardId = std::uint16_t;

// On-disk format constants; FORMAT.md documents the layout byte by byte.
inline constexpr char kShardMagic[4] = {'E', 'V', 'L', 'G'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint64_t kRowHeaderBytes = 18;  // seq_id u64 + behavior_id u16 + timestamp i64
inline constexpr std::uint64_t kSlotBytes = 2;
inline constexpr std::uint64_t kDefaultAddrBytes = 8;
inline constexpr std::uint64_t kShardMetadataBytes = 256;
inline constexpr std::size_t kShardFixedHeaderBytes = 20;
inline constexpr std::size_t kMaxShardColumns = (kShardMetadataBytes - kShardFixedHeaderBytes) / 2;

struct EventRow {
  std::uint64_t seq_id = 0;
  BehaviorId behavior = 0;
  std::int64_t timestamp_ms = 0;
  std::vector<Value> cells;
  std::vector<FilterId> slots;  // kNullFilter = empty slot

  bool operator==(const EventRow&) const = default;
};

struct SizeReport {
  std::uint64_t data_bytes = 0;
  std::uint64_t index_address_bytes = 0;
  std::uint64_t metadata_bytes = 0;
  std::uint64_t total_bytes = 0;

  SizeReport& operator+=(const SizeReport& o) noexcept {
    data_bytes += o.data_bytes;
    index_address_bytes += o.index_address_bytes;
    metadata_bytes += o.metadata_bytes;
    total_bytes += o.total_bytes;
    return *this;
  }
  bool operator==(const SizeReport&) const = default;
};

/// Decoding needs to know, per cell, which kind was written (or that the cell
/// is null). The layout that produced the shard supplies this.
using CellKindResolver =
    std::function<std::optional<AttrKind>(BehaviorId behavior, std::size_t column, std::span<const FilterId> slots)>;

/// Dense row store for one shard plus its per-slot-column index.
///
/// Rows have a fixed encoded width inside a shard, so the address of row `i`
/// is `kShardMetadataBytes + i * row_size()`. Each slot column indexes every
/// row exactly once, null slots included.
class LogShard {
 public:
  LogShard(ShardId id, std::vector<std::uint16_t> column_widths, std::uint16_t slot_count,
           std::uint16_t addr_bytes = kDefaultAddrBytes);

  ShardId id() const noexcept { return id_; }
  std::size_t k() const noexcept { return widths_.size(); }
  std::uint16_t slot_count() const noexcept { return slot_count_; }
  std::uint16_t addr_bytes() const noexcept { return addr_bytes_; }
  const std::vector<std::uint16_t>& column_widths() const noexcept { return widths_; }
  std::uint64_t row_size() const noexcept { return row_size_; }

  /// Validates and appends; returns the row's address.
  std::uint64_t append_row(EventRow row);

  /// Rows with slots[column] == value and lo <= timestamp < hi, in seq_id
  /// order. Served from the index.
  std::vector<const EventRow*> scan_by_slot(std::size_t column, FilterId value, std::int64_t lo,
                                            std::int64_t hi) const;

  std::size_t row_count() const noexcept { return rows_.size(); }
  const std::vector<EventRow>& rows() const noexcept { return rows_; }
  const EventRow& row(std::size_t pos) const { return rows_.at(pos); }

  std::uint64_t address_of(std::size_t pos) const noexcept { return kShardMetadataBytes + pos * row_size_; }
  /// Row position for an address; throws CorruptIndex for an invalid one.
  std::size_t position_of(std::uint64_t address) const;

  /// value → ascending row addresses, for one slot column.
  const std::map<FilterId, std::vector<std::uint64_t>>& index(std::size_t column) const;

  SizeReport measure_sizes() const noexcept;

  /// Re-orders rows by (behavior, seq_id, smallest non-null slot) and rebuilds
  /// the index. Two shards holding the same rows serialize identically after this.
  void canonicalize();

  std::uint64_t version() const noexcept { return version_; }

  std::vector<std::byte> serialize() const;
  static LogShard deserialize(std::span<const std::byte> bytes, const CellKindResolver& resolver);

 private:
  friend class LogStore;
  void index_row(std::size_t pos);

  ShardId id_;
  std::vector<std::uint16_t> widths_;
  std::uint16_t slot_count_;
  std::uint16_t addr_bytes_;
  std::uint64_t row_size_;
  std::vector<EventRow> rows_;
  std::vector<std::map<FilterId, std::vector<std::uint64_t>>> index_;
  std::uint64_t version_ = 0;
};

/// A behavior log: a set of shard files in one directory.
class LogStore {
 public:
  /// Throws ShardExists on a duplicate id and InvalidShardSpec when k or
  /// slot_count is zero or a width is zero.
  LogShard& create_shard(ShardId id, std::vector<std::uint16_t> column_widths, std::uint16_t slot_count,
                         std::uint16_t addr_bytes = kDefaultAddrBytes);
  /// Inserts a fully built shard, replacing any shard with the same id.
  void put_shard(LogShard shard);
  void drop_shard(ShardId id);

  bool has_shard(ShardId id) const noexcept { return shards_.count(id) != 0; }
  LogShard& shard(ShardId id);
  const LogShard& shard(ShardId id) const;
  const std::map<ShardId, LogShard>& shards() const noexcept { return shards_; }

  std::uint64_t row_count() const noexcept;
  SizeReport measure_sizes() const noexcept;

  void canonicalize();
  /// Changes whenever any row or shard is added or removed.
  std::uint64_t generation() const noexcept;

  static std::filesystem::path shard_path(const std::filesystem::path& dir, ShardId id);
  /// Writes every shard and removes stale shard files from `dir`.
  void write_dir(const std::filesystem::path& dir) const;
  static LogStore read_dir(const std::filesystem::path& dir, const CellKindResolver& resolver);

 private:
  std::map<ShardId, LogShard> shards_;
  std::uint64_t structure_version_ = 0;
};

}  // namespace evlog
