#include "evlog/logstore.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <tuple>

#include "evlog/error.hpp"

namespace evlog {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::byte>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    auto u = static_cast<std::uint64_t>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
  }
  void put_uint(std::uint64_t value, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i) out_.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
  std::span<std::byte> reserve(std::size_t n) {
    const auto at = out_.size();
    out_.resize(at + n, std::byte{0});
    return {out_.data() + at, n};
  }

 private:
  std::vector<std::byte>& out_;
};

std::uint64_t get_uint(std::span<const std::byte> in, std::size_t at, std::size_t bytes) {
  if (at + bytes > in.size()) throw Error(ErrorCode::CorruptFile, "truncated shard file");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < bytes; ++i) u |= std::uint64_t(std::to_integer<std::uint8_t>(in[at + i])) << (8 * i);
  return u;
}

FilterId min_slot(const EventRow& r) {
  FilterId m = 0xFFFF;
  for (auto s : r.slots) {
    if (s != kNullFilter) m = std::min(m, s);
  }
  return m;
}

}  // namespace

LogShard::LogShard(ShardId id, std::vector<std::uint16_t> column_widths, std::uint16_t slot_count,
                   std::uint16_t addr_bytes)
    : id_(id), widths_(std::move(column_widths)), slot_count_(slot_count), addr_bytes_(addr_bytes) {
  if (widths_.empty() || slot_count_ == 0) {
    throw Error(ErrorCode::InvalidShardSpec, "shard needs k >= 1 and slot_count >= 1");
  }
  if (widths_.size() > kMaxShardColumns) {
    throw Error(ErrorCode::InvalidShardSpec, "too many columns for the shard header");
  }
  if (std::any_of(widths_.begin(), widths_.end(), [](auto w) { return w == 0; })) {
    throw Error(ErrorCode::InvalidShardSpec, "zero column width");
  }
  if (addr_bytes_ != 4 && addr_bytes_ != 8) throw Error(ErrorCode::InvalidShardSpec, "address size must be 4 or 8");
  row_size_ = kRowHeaderBytes + std::accumulate(widths_.begin(), widths_.end(), std::uint64_t{0}) +
              kSlotBytes * slot_count_;
  index_.resize(slot_count_);
}

std::uint64_t LogShard::append_row(EventRow row) {
  if (row.cells.size() != widths_.size()) {
    throw Error(ErrorCode::CellCountMismatch, std::to_string(row.cells.size()) + " cells for a k=" +
                                                  std::to_string(widths_.size()) + " shard");
  }
  if (row.slots.size() != slot_count_) {
    throw Error(ErrorCode::SlotCountMismatch, std::to_string(row.slots.size()) + " slots for a shard with " +
                                                  std::to_string(slot_count_));
  }
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    const auto& c = row.cells[i];
    if (!fits_width(c, widths_[i])) {
      throw Error(ErrorCode::WidthOverflow, "cell " + std::to_string(i) + " exceeds width " + std::to_string(widths_[i]));
    }
    if (auto* s = std::get_if<std::string>(&c); s && s->find('\0') != std::string::npos) {
      throw Error(ErrorCode::InvalidValue, "string contains NUL");
    }
  }
  if (addr_bytes_ == 4 && address_of(rows_.size()) > 0xFFFFFFFFull) {
    throw Error(ErrorCode::InvalidShardSpec, "shard exceeds 32-bit addressing");
  }
  rows_.push_back(std::move(row));
  index_row(rows_.size() - 1);
  ++version_;
  return address_of(rows_.size() - 1);
}

void LogShard::index_row(std::size_t pos) {
  const auto addr = address_of(pos);
  const auto& r = rows_[pos];
  for (std::size_t c = 0; c < slot_count_; ++c) {
    auto& list = index_[c][r.slots[c]];
    if (!list.empty() && list.back() > addr) {
      list.insert(std::upper_bound(list.begin(), list.end(), addr), addr);
    } else {
      list.push_back(addr);
    }
  }
}

std::size_t LogShard::position_of(std::uint64_t address) const {
  if (address < kShardMetadataBytes || (address - kShardMetadataBytes) % row_size_ != 0) {
    throw Error(ErrorCode::CorruptIndex, "misaligned address " + std::to_string(address));
  }
  const auto pos = (address - kShardMetadataBytes) / row_size_;
  if (pos >= rows_.size()) throw Error(ErrorCode::CorruptIndex, "address past end " + std::to_string(address));
  return static_cast<std::size_t>(pos);
}

const std::map<FilterId, std::vector<std::uint64_t>>& LogShard::index(std::size_t column) const {
  if (column >= slot_count_) throw Error(ErrorCode::UnknownColumn, "slot column " + std::to_string(column));
  return index_[column];
}

std::vector<const EventRow*> LogShard::scan_by_slot(std::size_t column, FilterId value, std::int64_t lo,
                                                    std::int64_t hi) const {
  const auto& idx = index(column);
  std::vector<const EventRow*> out;
  auto it = idx.find(value);
  if (it == idx.end()) return out;
  out.reserve(it->second.size());
  for (auto addr : it->second) {
    const auto& r = rows_[position_of(addr)];
    if (r.timestamp_ms >= lo && r.timestamp_ms < hi) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const EventRow* a, const EventRow* b) { return a->seq_id < b->seq_id; });
  return out;
}

SizeReport LogShard::measure_sizes() const noexcept {
  SizeReport r;
  r.data_bytes = rows_.size() * row_size_;
  r.index_address_bytes = rows_.size() * slot_count_ * std::uint64_t{addr_bytes_};
  r.metadata_bytes = kShardMetadataBytes;
  r.total_bytes = r.data_bytes + r.index_address_bytes + r.metadata_bytes;
  return r;
}

void LogShard::canonicalize() {
  std::stable_sort(rows_.begin(), rows_.end(), [](const EventRow& a, const EventRow& b) {
    return std::make_tuple(a.behavior, a.seq_id, min_slot(a)) < std::make_tuple(b.behavior, b.seq_id, min_slot(b));
  });
  index_.assign(slot_count_, {});
  for (std::size_t i = 0; i < rows_.size(); ++i) index_row(i);
  ++version_;
}

std::vector<std::byte> LogShard::serialize() const {
  std::vector<std::byte> out;
  const auto sizes = measure_sizes();
  out.reserve(sizes.total_bytes);
  Writer w(out);
  for (char c : kShardMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kFormatVersion);
  w.put(static_cast<std::uint16_t>(widths_.size()));
  w.put(slot_count_);
  w.put(addr_bytes_);
  w.put(static_cast<std::uint64_t>(rows_.size()));
  for (auto width : widths_) w.put(width);
  out.resize(kShardMetadataBytes, std::byte{0});

  for (const auto& r : rows_) {
    w.put(r.seq_id);
    w.put(r.behavior);
    w.put(static_cast<std::uint64_t>(r.timestamp_ms));
    for (std::size_t i = 0; i < widths_.size(); ++i) encode_cell(r.cells[i], widths_[i], w.reserve(widths_[i]));
    for (auto s : r.slots) w.put(s);
  }
  for (const auto& column : index_) {
    for (const auto& [value, addrs] : column) {
      for (auto a : addrs) w.put_uint(a, addr_bytes_);
    }
  }
  return out;
}

LogShard LogShard::deserialize(std::span<const std::byte> in, const CellKindResolver& resolver) {
  if (in.size() < kShardMetadataBytes) throw Error(ErrorCode::CorruptFile, "shard file shorter than its header");
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::to_integer<char>(in[i]) != kShardMagic[i]) throw Error(ErrorCode::CorruptFile, "bad magic");
  }
  if (get_uint(in, 4, 2) != kFormatVersion) throw Error(ErrorCode::CorruptFile, "unsupported format version");
  const auto k = static_cast<std::size_t>(get_uint(in, 6, 2));
  const auto slot_count = static_cast<std::uint16_t>(get_uint(in, 8, 2));
  const auto addr_bytes = static_cast<std::uint16_t>(get_uint(in, 10, 2));
  const auto row_count = get_uint(in, 12, 8);
  if (k == 0 || k > kMaxShardColumns) throw Error(ErrorCode::CorruptFile, "bad column count");
  std::vector<std::uint16_t> widths(k);
  for (std::size_t i = 0; i < k; ++i) widths[i] = static_cast<std::uint16_t>(get_uint(in, kShardFixedHeaderBytes + 2 * i, 2));

  // Shard id is not stored in the file; callers that care pass it via put_shard.
  LogShard shard(0, std::move(widths), slot_count, addr_bytes);
  const auto expected = kShardMetadataBytes + row_count * shard.row_size_ + row_count * slot_count * addr_bytes;
  if (in.size() != expected) {
    throw Error(ErrorCode::CorruptFile,
                "file is " + std::to_string(in.size()) + " bytes, header implies " + std::to_string(expected));
  }

  std::size_t at = kShardMetadataBytes;
  shard.rows_.reserve(row_count);
  for (std::uint64_t n = 0; n < row_count; ++n) {
    EventRow r;
    r.seq_id = get_uint(in, at, 8);
    r.behavior = static_cast<BehaviorId>(get_uint(in, at + 8, 2));
    r.timestamp_ms = static_cast<std::int64_t>(get_uint(in, at + 10, 8));
    std::size_t cell_at = at + kRowHeaderBytes;
    std::size_t slot_at = cell_at;
    for (auto width : shard.widths_) slot_at += width;
    r.slots.resize(slot_count);
    for (std::size_t s = 0; s < slot_count; ++s) r.slots[s] = static_cast<FilterId>(get_uint(in, slot_at + 2 * s, 2));
    r.cells.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      const auto width = shard.widths_[c];
      r.cells.push_back(decode_cell(resolver(r.behavior, c, r.slots), in.subspan(cell_at, width)));
      cell_at += width;
    }
    shard.rows_.push_back(std::move(r));
    at += shard.row_size_;
  }
  for (std::size_t i = 0; i < shard.rows_.size(); ++i) shard.index_row(i);

  // The stored index must agree with the one implied by the rows.
  for (const auto& column : shard.index_) {
    for (const auto& [value, addrs] : column) {
      for (auto a : addrs) {
        if (get_uint(in, at, addr_bytes) != a) throw Error(ErrorCode::CorruptIndex, "index region disagrees with rows");
        at += addr_bytes;
      }
    }
  }
  return shard;
}

LogShard& LogStore::create_shard(ShardId id, std::vector<std::uint16_t> column_widths, std::uint16_t slot_count,
                                 std::uint16_t addr_bytes) {
  if (shards_.count(id)) throw Error(ErrorCode::ShardExists, "shard " + std::to_string(id));
  LogShard s(id, std::move(column_widths), slot_count, addr_bytes);
  ++structure_version_;
  return shards_.emplace(id, std::move(s)).first->second;
}

void LogStore::put_shard(LogShard shard) {
  const auto id = shard.id();
  shards_.insert_or_assign(id, std::move(shard));
  ++structure_version_;
}

void LogStore::drop_shard(ShardId id) {
  shards_.erase(id);
  ++structure_version_;
}

LogShard& LogStore::shard(ShardId id) {
  auto it = shards_.find(id);
  if (it == shards_.end()) throw Error(ErrorCode::UnknownShard, "shard " + std::to_string(id));
  return it->second;
}

const LogShard& LogStore::shard(ShardId id) const {
  auto it = shards_.find(id);
  if (it == shards_.end()) throw Error(ErrorCode::UnknownShard, "shard " + std::to_string(id));
  return it->second;
}

std::uint64_t LogStore::row_count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& [id, s] : shards_) n += s.row_count();
  return n;
}

SizeReport LogStore::measure_sizes() const noexcept {
  SizeReport total;
  for (const auto& [id, s] : shards_) total += s.measure_sizes();
  return total;
}

void LogStore::canonicalize() {
  for (auto& [id, s] : shards_) s.canonicalize();
}

std::uint64_t LogStore::generation() const noexcept {
  std::uint64_t g = structure_version_ << 32;
  for (const auto& [id, s] : shards_) g += s.version() + s.row_count();
  return g;
}

std::filesystem::path LogStore::shard_path(const std::filesystem::path& dir, ShardId id) {
  return dir / ("shard_" + std::to_string(id) + ".evlg");
}

void LogStore::write_dir(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".evlg") fs::remove(entry.path());
  }
  for (const auto& [id, s] : shards_) {
    const auto bytes = s.serialize();
    std::ofstream out(shard_path(dir, id), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + shard_path(dir, id).string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + shard_path(dir, id).string());
  }
}

LogStore LogStore::read_dir(const std::filesystem::path& dir, const CellKindResolver& resolver) {
  namespace fs = std::filesystem;
  LogStore store;
  if (!fs::exists(dir)) return store;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() != ".evlg") continue;
    const auto stem = p.stem().string();
    if (stem.rfind("shard_", 0) != 0) continue;
    const auto id = static_cast<ShardId>(std::stoul(stem.substr(6)));
    std::ifstream in(p, std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto shard = LogShard::deserialize(std::as_bytes(std::span(raw)), resolver);
    shard.id_ = id;
    store.shards_.emplace(id, std::move(shard));
  }
  return store;
}

}  // namespace evlog
