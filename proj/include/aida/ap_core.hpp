#pragma once

// Behavioral model of the associative processor: a CAM bit grid with a tag
// register, the compare / write / move / if_match / read instruction set, and
// per-cycle activity accounting for the cost model.
//
// Storage is bit-sliced: every bit column is a packed vector of `depth` bits,
// so one compare or write over c columns costs O(c * depth / 64) host work.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aida/error.hpp"

namespace aida {

enum class Direction { up, down };
enum class Step { short_step, long_step };

enum class InstrKind : std::uint8_t { compare, write, compare_write, move, if_match, read, load };
inline constexpr std::size_t kInstrKinds = 7;

constexpr std::string_view to_string(InstrKind kind) noexcept {
  switch (kind) {
    case InstrKind::compare: return "compare";
    case InstrKind::write: return "write";
    case InstrKind::compare_write: return "compare_write";
    case InstrKind::move: return "move";
    case InstrKind::if_match: return "if_match";
    case InstrKind::read: return "read";
    case InstrKind::load: return "load";
  }
  return "unknown";
}

// How compare_write treats a column that is both compared and written.
//  reject:  contract violation (the plain ISA form).
//  latched: the compare result is latched into the tag before the write phase.
//           Used by in-place perfect-induction passes whose entry order has
//           been checked for hazards.
enum class Overlap { reject, latched };

/// COMPARE / WRITE KEY plus MASK register contents for one instruction.
class KeyMask {
 public:
  explicit KeyMask(std::size_t width) : key_(width, 0), mask_(width, 0) {}

  KeyMask& set(std::size_t column, bool bit) {
    if (column >= key_.size()) {
      throw ContractViolation("key/mask column " + std::to_string(column) +
                              " outside width " + std::to_string(key_.size()));
    }
    if (mask_[column] == 0) {
      mask_[column] = 1;
      active_.push_back(column);
    }
    key_[column] = bit ? 1 : 0;
    return *this;
  }

  // Low `length` bits of `value` in two's complement into [base, base+length).
  KeyMask& set_field(std::size_t base, std::size_t length, std::int64_t value) {
    for (std::size_t t = 0; t < length; ++t) {
      set(base + t, ((value >> std::min<std::size_t>(t, 63)) & 1) != 0);
    }
    return *this;
  }

  std::size_t width() const noexcept { return key_.size(); }
  bool masked(std::size_t column) const { return mask_.at(column) != 0; }
  bool key(std::size_t column) const { return key_.at(column) != 0; }
  std::size_t active_count() const noexcept { return active_.size(); }
  const std::vector<std::size_t>& active_columns() const noexcept { return active_; }

  bool overlaps(const KeyMask& other) const {
    return std::any_of(active_.begin(), active_.end(),
                       [&](std::size_t c) { return c < other.width() && other.masked(c); });
  }

 private:
  std::vector<std::uint8_t> key_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> active_;
};

/// Aggregate activity. Every field is a plain sum over issued cycles, so two
/// Activity values of consecutive program segments add up exactly.
struct Activity {
  std::uint64_t cycles = 0;
  std::array<std::uint64_t, kInstrKinds> by_kind{};
  std::uint64_t compare_cell_rows = 0;  // sum of compared columns x rows
  std::uint64_t write_cell_rows = 0;    // sum of written columns x tagged rows
  std::uint64_t tag_row_events = 0;     // sum of rows (every cycle clocks every tag cell)

  std::uint64_t count(InstrKind kind) const { return by_kind[static_cast<std::size_t>(kind)]; }

  Activity& operator+=(const Activity& o) {
    cycles += o.cycles;
    for (std::size_t i = 0; i < kInstrKinds; ++i) by_kind[i] += o.by_kind[i];
    compare_cell_rows += o.compare_cell_rows;
    write_cell_rows += o.write_cell_rows;
    tag_row_events += o.tag_row_events;
    return *this;
  }
  friend Activity operator+(Activity a, const Activity& b) { return a += b; }
  friend Activity operator-(Activity a, const Activity& b) {
    a.cycles -= b.cycles;
    for (std::size_t i = 0; i < kInstrKinds; ++i) a.by_kind[i] -= b.by_kind[i];
    a.compare_cell_rows -= b.compare_cell_rows;
    a.write_cell_rows -= b.write_cell_rows;
    a.tag_row_events -= b.tag_row_events;
    return a;
  }
  bool operator==(const Activity&) const = default;
};

struct TraceRecord {
  std::uint64_t seq = 0;
  InstrKind kind = InstrKind::compare;
  std::uint32_t compare_columns = 0;
  std::uint32_t write_columns = 0;
  std::uint64_t tagged_rows = 0;
  std::uint64_t total_rows = 0;
  std::string_view stage;  // points at a string literal

  bool operator==(const TraceRecord&) const = default;
};

struct CycleCounters {
  Activity totals;
  bool tracing = false;
  std::vector<TraceRecord> log;
};

class ApState {
 public:
  ApState(std::size_t depth, std::size_t width, std::size_t long_step = 16)
      : depth_(depth), width_(width), long_step_(long_step) {
    if (depth == 0 || width == 0) {
      throw ConfigError("AP geometry must be at least 1x1 (got " + std::to_string(depth) + "x" +
                        std::to_string(width) + ")");
    }
    if (long_step < 2 || !std::has_single_bit(long_step)) {
      throw ConfigError("long_step must be a power of two >= 2 (got " +
                        std::to_string(long_step) + ")");
    }
    if (depth > (std::size_t{1} << 40) || width > (std::size_t{1} << 20)) {
      throw ConfigError("AP geometry too large");
    }
    words_ = (depth + 63) / 64;
    tail_ = (depth % 64 == 0) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (depth % 64)) - 1);
    columns_.assign(width, Column(words_, 0));
    tag_.assign(words_, 0);
  }

  std::size_t depth() const noexcept { return depth_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t long_step() const noexcept { return long_step_; }

  // ---- instructions ------------------------------------------------------

  void compare(const KeyMask& km) {
    check_width(km);
    match(km);
    record(InstrKind::compare, km.active_count(), 0, tagged_count());
  }

  void write(const KeyMask& km) {
    check_width(km);
    apply_write(km);
    record(InstrKind::write, 0, km.active_count(), tagged_count());
  }

  void compare_write(const KeyMask& cmp, const KeyMask& wr, Overlap overlap = Overlap::reject) {
    check_width(cmp);
    check_width(wr);
    if (overlap == Overlap::reject && cmp.overlaps(wr)) {
      throw ContractViolation("compare_write: compare and write columns overlap");
    }
    match(cmp);
    apply_write(wr);
    record(InstrKind::compare_write, cmp.active_count(), wr.active_count(), tagged_count());
  }

  void move_tag(Direction dir, Step step) {
    const std::size_t s = step == Step::short_step ? 1 : long_step_;
    if (dir == Direction::up) {
      shift_toward_lower(tag_, s);
    } else {
      shift_toward_higher(tag_, s);
    }
    record(InstrKind::move, 0, 0, tagged_count());
  }

  bool if_match() {
    const bool any = std::any_of(tag_.begin(), tag_.end(), [](std::uint64_t w) { return w != 0; });
    record(InstrKind::if_match, 0, 0, tagged_count());
    return any;
  }

  std::vector<std::uint8_t> read_row(std::size_t row) {
    check_row(row);
    std::vector<std::uint8_t> out(width_);
    for (std::size_t c = 0; c < width_; ++c) out[c] = bit(row, c) ? 1 : 0;
    record(InstrKind::read, 0, 0, 1);
    return out;
  }

  // Sequential host load of one PU: writes the masked columns of `row`.
  // One cycle, like a conventional memory write.
  void load_row(std::size_t row, const KeyMask& km) {
    check_row(row);
    check_width(km);
    for (std::size_t c : km.active_columns()) put(row, c, km.key(c));
    record(InstrKind::load, 0, km.active_count(), 1);
  }

  // ---- host inspection (no cycle) ----------------------------------------

  bool bit(std::size_t row, std::size_t col) const {
    return ((columns_[col][row / 64] >> (row % 64)) & 1) != 0;
  }
  bool tag(std::size_t row) const { return ((tag_[row / 64] >> (row % 64)) & 1) != 0; }

  std::size_t tagged_count() const noexcept {
    std::size_t n = 0;
    for (std::uint64_t w : tag_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  // Raw bits [base, base+length) of a row, length <= 64.
  std::uint64_t peek(std::size_t row, std::size_t base, std::size_t length) const {
    check_row(row);
    if (length > 64 || base + length > width_) throw ContractViolation("peek outside row");
    std::uint64_t v = 0;
    for (std::size_t t = 0; t < length; ++t) {
      if (bit(row, base + t)) v |= std::uint64_t{1} << t;
    }
    return v;
  }

  // Back door for fault injection and test seeding; not an instruction.
  void poke(std::size_t row, std::size_t col, bool value) {
    check_row(row);
    if (col >= width_) throw ContractViolation("poke outside width");
    put(row, col, value);
  }

  // ---- accounting --------------------------------------------------------

  const CycleCounters& counters() const noexcept { return counters_; }
  const Activity& activity() const noexcept { return counters_.totals; }
  std::uint64_t cycles() const noexcept { return counters_.totals.cycles; }

  void enable_trace(bool on) { counters_.tracing = on; }
  void set_stage(std::string_view stage) { stage_ = stage; }
  std::string_view stage() const noexcept { return stage_; }

  void reset_counters() {
    const bool tracing = counters_.tracing;
    counters_ = CycleCounters{};
    counters_.tracing = tracing;
  }

 private:
  using Column = std::vector<std::uint64_t>;

  void check_width(const KeyMask& km) const {
    if (km.width() != width_) {
      throw ContractViolation("key/mask width " + std::to_string(km.width()) +
                              " != AP width " + std::to_string(width_));
    }
  }
  void check_row(std::size_t row) const {
    if (row >= depth_) {
      throw ContractViolation("row " + std::to_string(row) + " outside depth " +
                              std::to_string(depth_));
    }
  }

  void put(std::size_t row, std::size_t col, bool value) {
    const std::uint64_t m = std::uint64_t{1} << (row % 64);
    auto& w = columns_[col][row / 64];
    w = value ? (w | m) : (w & ~m);
  }

  void match(const KeyMask& km) {
    std::fill(tag_.begin(), tag_.end(), ~std::uint64_t{0});
    tag_.back() &= tail_;
    for (std::size_t c : km.active_columns()) {
      const Column& col = columns_[c];
      if (km.key(c)) {
        for (std::size_t w = 0; w < words_; ++w) tag_[w] &= col[w];
      } else {
        for (std::size_t w = 0; w < words_; ++w) tag_[w] &= ~col[w];
      }
    }
  }

  void apply_write(const KeyMask& km) {
    for (std::size_t c : km.active_columns()) {
      Column& col = columns_[c];
      if (km.key(c)) {
        for (std::size_t w = 0; w < words_; ++w) col[w] |= tag_[w];
      } else {
        for (std::size_t w = 0; w < words_; ++w) col[w] &= ~tag_[w];
      }
    }
  }

  // v'[i] = v[i + s], zero fill at the bottom.
  void shift_toward_lower(Column& v, std::size_t s) const {
    const std::size_t ws = s / 64;
    const std::size_t bs = s % 64;
    for (std::size_t i = 0; i < words_; ++i) {
      const std::uint64_t lo = i + ws < words_ ? v[i + ws] : 0;
      const std::uint64_t hi = i + ws + 1 < words_ ? v[i + ws + 1] : 0;
      v[i] = bs == 0 ? lo : (lo >> bs) | (hi << (64 - bs));
    }
    v.back() &= tail_;
  }

  // v'[i] = v[i - s], zero fill at the top.
  void shift_toward_higher(Column& v, std::size_t s) const {
    const std::size_t ws = s / 64;
    const std::size_t bs = s % 64;
    for (std::size_t i = words_; i-- > 0;) {
      const std::uint64_t hi = i >= ws ? v[i - ws] : 0;
      const std::uint64_t lo = i >= ws + 1 ? v[i - ws - 1] : 0;
      v[i] = bs == 0 ? hi : (hi << bs) | (lo >> (64 - bs));
    }
    v.back() &= tail_;
  }

  void record(InstrKind kind, std::size_t cmp_cols, std::size_t wr_cols, std::size_t tagged) {
    Activity& a = counters_.totals;
    a.cycles += 1;
    a.by_kind[static_cast<std::size_t>(kind)] += 1;
    a.compare_cell_rows += static_cast<std::uint64_t>(cmp_cols) * depth_;
    a.write_cell_rows += static_cast<std::uint64_t>(wr_cols) * tagged;
    a.tag_row_events += depth_;
    if (counters_.tracing) {
      counters_.log.push_back(TraceRecord{a.cycles - 1, kind, static_cast<std::uint32_t>(cmp_cols),
                                          static_cast<std::uint32_t>(wr_cols), tagged, depth_,
                                          stage_});
    }
  }

  std::size_t depth_;
  std::size_t width_;
  std::size_t long_step_;
  std::size_t words_ = 0;
  std::uint64_t tail_ = 0;
  std::vector<Column> columns_;
  Column tag_;
  CycleCounters counters_;
  std::string_view stage_ = "";
};

}  // namespace aida
