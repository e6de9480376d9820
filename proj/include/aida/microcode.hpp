#pragma once

// Perfect-induction microcode: every routine here is a sequence of ap_core
// instructions. A truth table is applied by comparing each input pattern
// against the whole array and writing the precomputed output into the tagged
// rows, so the cost is the number of issued table entries, independent of
// the number of rows.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aida/ap_core.hpp"

namespace aida {

struct BitRef {
  std::size_t column = 0;
  bool operator==(const BitRef&) const = default;
};

struct FieldRef {
  std::size_t base = 0;
  std::size_t length = 0;
  std::string_view name;

  BitRef bit(std::size_t i) const {
    if (i >= length) {
      throw ContractViolation("bit " + std::to_string(i) + " outside field " + std::string(name));
    }
    return {base + i};
  }
  BitRef top() const { return bit(length - 1); }
  std::size_t end() const noexcept { return base + length; }
  bool contains(BitRef b) const noexcept { return b.column >= base && b.column < end(); }
  bool overlaps(const FieldRef& o) const noexcept {
    return length != 0 && o.length != 0 && base < o.end() && o.base < end();
  }
};

// Extra compare condition ANDed into every entry of a pass.
struct Guard {
  BitRef column;
  bool value = false;
};

// Bit t of `input` is the required value of inputs[t]; bit t of `output` is
// written to outputs[t].
struct TruthEntry {
  std::uint32_t input = 0;
  std::uint32_t output = 0;
};

namespace detail {

inline std::vector<std::size_t> union_columns(std::span<const BitRef> a, std::span<const BitRef> b) {
  std::vector<std::size_t> u;
  for (auto r : a) u.push_back(r.column);
  for (auto r : b) u.push_back(r.column);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

inline std::size_t position(const std::vector<std::size_t>& u, BitRef r) {
  return static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), r.column) - u.begin());
}

}  // namespace detail

// An entry is a fixed point when every output column is also an input column
// and the entry would rewrite exactly the bits its key already requires.
// Fixed points are never issued.
inline bool is_fixed_point(std::span<const BitRef> inputs, std::span<const BitRef> outputs,
                           const TruthEntry& e) {
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    auto it = std::find(inputs.begin(), inputs.end(), outputs[o]);
    if (it == inputs.end()) return false;
    const auto t = static_cast<std::size_t>(it - inputs.begin());
    if (((e.input >> t) & 1) != ((e.output >> o) & 1)) return false;
  }
  return true;
}

/// Atomicity checker. Replays the issued entries of a pass one at a time on a
/// single row for every seeding of the involved columns and compares against
/// applying the table atomically to the row's original inputs. Returns the
/// first seeding (bit i = i-th involved column in ascending column order) for
/// which the two disagree.
inline std::optional<std::uint32_t> find_order_hazard(std::span<const BitRef> inputs,
                                                      std::span<const BitRef> outputs,
                                                      std::span<const TruthEntry> entries) {
  const auto u = detail::union_columns(inputs, outputs);
  if (u.size() > 20) throw ContractViolation("truth table too wide for hazard analysis");
  std::vector<std::size_t> in_pos;
  std::vector<std::size_t> out_pos;
  for (auto r : inputs) in_pos.push_back(detail::position(u, r));
  for (auto r : outputs) out_pos.push_back(detail::position(u, r));

  auto gather = [&](std::uint32_t state) {
    std::uint32_t v = 0;
    for (std::size_t t = 0; t < in_pos.size(); ++t) v |= ((state >> in_pos[t]) & 1u) << t;
    return v;
  };
  auto scatter = [&](std::uint32_t state, std::uint32_t out) {
    for (std::size_t t = 0; t < out_pos.size(); ++t) {
      const std::uint32_t m = 1u << out_pos[t];
      state = ((out >> t) & 1u) ? (state | m) : (state & ~m);
    }
    return state;
  };

  const std::uint32_t seedings = 1u << u.size();
  for (std::uint32_t seed = 0; seed < seedings; ++seed) {
    std::uint32_t atomic = seed;
    const std::uint32_t key = gather(seed);
    for (const auto& e : entries) {
      if (e.input == key) {
        atomic = scatter(seed, e.output);
        break;
      }
    }
    std::uint32_t serial = seed;
    for (const auto& e : entries) {
      if (is_fixed_point(inputs, outputs, e)) continue;
      if (gather(serial) == e.input) serial = scatter(serial, e.output);
    }
    if (serial != atomic) return seed;
  }
  return std::nullopt;
}

/// One perfect-induction program: an ordered list of (input pattern -> output
/// pattern) entries over a set of bit columns. Rows whose inputs match no
/// entry are left unchanged. In-place tables (outputs overlapping inputs)
/// must have an entry order that passes the atomicity checker.
class TruthTablePass {
 public:
  TruthTablePass(std::vector<BitRef> inputs, std::vector<BitRef> outputs,
                 std::vector<TruthEntry> entries)
      : inputs_(std::move(inputs)), outputs_(std::move(outputs)), entries_(std::move(entries)) {
    if (inputs_.size() > 31 || outputs_.size() > 31) {
      throw ContractViolation("truth table wider than 31 bits");
    }
    std::set<std::uint32_t> seen;
    for (const auto& e : entries_) {
      if (!seen.insert(e.input).second) {
        throw ContractViolation("truth table has duplicate input pattern " +
                                std::to_string(e.input));
      }
    }
    for (auto o : outputs_) {
      if (std::find(inputs_.begin(), inputs_.end(), o) != inputs_.end()) in_place_ = true;
    }
    if (in_place_) {
      if (auto seed = find_order_hazard(inputs_, outputs_, entries_)) {
        throw ContractViolation("in-place truth table entry order is hazardous (seeding " +
                                std::to_string(*seed) + ")");
      }
    }
  }

  const std::vector<BitRef>& inputs() const noexcept { return inputs_; }
  const std::vector<BitRef>& outputs() const noexcept { return outputs_; }
  const std::vector<TruthEntry>& entries() const noexcept { return entries_; }
  bool in_place() const noexcept { return in_place_; }

  std::size_t issued_count() const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](auto& e) {
      return !is_fixed_point(inputs_, outputs_, e);
    }));
  }

 private:
  std::vector<BitRef> inputs_;
  std::vector<BitRef> outputs_;
  std::vector<TruthEntry> entries_;
  bool in_place_ = false;
};

/// Issues one compare_write per non-fixed-point entry. Returns cycles issued.
inline std::size_t run_tt_pass(ApState& ap, const TruthTablePass& tt,
                               std::span<const Guard> guards = {}) {
  for (const auto& g : guards) {
    if (std::find(tt.outputs().begin(), tt.outputs().end(), g.column) != tt.outputs().end()) {
      throw ContractViolation("guard column is written by the pass");
    }
  }
  std::size_t issued = 0;
  const Overlap overlap = tt.in_place() ? Overlap::latched : Overlap::reject;
  for (const auto& e : tt.entries()) {
    if (is_fixed_point(tt.inputs(), tt.outputs(), e)) continue;
    KeyMask cmp(ap.width());
    KeyMask wr(ap.width());
    for (const auto& g : guards) cmp.set(g.column.column, g.value);
    for (std::size_t t = 0; t < tt.inputs().size(); ++t) {
      cmp.set(tt.inputs()[t].column, ((e.input >> t) & 1u) != 0);
    }
    for (std::size_t t = 0; t < tt.outputs().size(); ++t) {
      wr.set(tt.outputs()[t].column, ((e.output >> t) & 1u) != 0);
    }
    ap.compare_write(cmp, wr, overlap);
    ++issued;
  }
  return issued;
}

// ---- clearing -------------------------------------------------------------

/// Zeroes several disjoint fields in every row with one tag-all compare_write.
/// Returns 0 cycles when all fields are empty.
inline std::size_t clear_fields(ApState& ap, std::span<const FieldRef> fields) {
  KeyMask wr(ap.width());
  for (const auto& f : fields) {
    if (f.end() > ap.width()) throw ContractViolation("field outside AP width");
    for (std::size_t t = 0; t < f.length; ++t) wr.set(f.base + t, false);
  }
  if (wr.active_count() == 0) return 0;
  ap.compare_write(KeyMask(ap.width()), wr);
  return 1;
}

inline std::size_t clear_field(ApState& ap, const FieldRef& f) {
  return clear_fields(ap, std::span<const FieldRef>(&f, 1));
}

inline std::size_t clear_bit(ApState& ap, BitRef b) {
  return clear_field(ap, FieldRef{b.column, 1, "bit"});
}

// ---- single-bit primitives ------------------------------------------------

/// dst := a AND b in every row. 2 cycles.
inline std::size_t bit_and(ApState& ap, BitRef dst, BitRef a, BitRef b) {
  if (dst == a || dst == b) throw ContractViolation("bit_and: destination aliases an operand");
  std::size_t cycles = clear_bit(ap, dst);
  cycles += run_tt_pass(ap, TruthTablePass({a, b}, {dst}, {{0b11, 0b1}}));
  return cycles;
}

// Full-adder entries over inputs (p, s, c) and outputs (s, c). The first four
// are the only non-fixed points; each one writes a pattern that can only match
// an entry issued earlier, so one carry column suffices.
inline std::vector<TruthEntry> full_adder_entries() {
  return {
      {0b100, 0b01},  // p0 s0 c1 -> s1 c0
      {0b110, 0b10},  // p0 s1 c1 -> s0 c1
      {0b011, 0b10},  // p1 s1 c0 -> s0 c1
      {0b001, 0b01},  // p1 s0 c0 -> s1 c0
      {0b000, 0b00},
      {0b010, 0b01},
      {0b101, 0b10},
      {0b111, 0b11},
  };
}

// Full subtractor s - p - borrow over the same column roles.
inline std::vector<TruthEntry> full_subtractor_entries() {
  return {
      {0b110, 0b00},  // p0 s1 b1 -> s0 b0
      {0b100, 0b11},  // p0 s0 b1 -> s1 b1
      {0b001, 0b11},  // p1 s0 b0 -> s1 b1
      {0b011, 0b00},  // p1 s1 b0 -> s0 b0
      {0b000, 0b00},
      {0b010, 0b01},
      {0b101, 0b10},
      {0b111, 0b11},
  };
}

inline void check_distinct(BitRef a, BitRef b, BitRef c, const char* what) {
  if (a == b || a == c || b == c) throw ContractViolation(std::string(what) + ": aliased columns");
}

/// (s, carry) := (s ^ p ^ carry, majority(s, p, carry)); p unchanged. 4 cycles.
inline std::size_t full_add(ApState& ap, BitRef s, BitRef p, BitRef carry,
                            std::span<const Guard> guards = {}) {
  check_distinct(s, p, carry, "full_add");
  return run_tt_pass(ap, TruthTablePass({p, s, carry}, {s, carry}, full_adder_entries()), guards);
}

/// (s, borrow) := (s ^ p ^ borrow, borrow-out of s - p - borrow). 4 cycles.
inline std::size_t full_subtract(ApState& ap, BitRef s, BitRef p, BitRef borrow,
                                 std::span<const Guard> guards = {}) {
  check_distinct(s, p, borrow, "full_subtract");
  return run_tt_pass(ap, TruthTablePass({p, s, borrow}, {s, borrow}, full_subtractor_entries()),
                     guards);
}

// Carry propagation with an implicit zero addend bit: the two p=0 entries.
inline std::size_t propagate_carry(ApState& ap, BitRef s, BitRef carry,
                                   std::span<const Guard> guards = {}) {
  if (s == carry) throw ContractViolation("propagate_carry: aliased columns");
  return run_tt_pass(ap, TruthTablePass({s, carry}, {s, carry}, {{0b10, 0b01}, {0b11, 0b10}}),
                     guards);
}

// ---- word-level routines --------------------------------------------------

/// acc := acc + addend (mod 2^acc.length). The addend is sign- or
/// zero-extended. Cost: 1 carry clear + 4 per bit covered by the addend or
/// its sign extension + 2 per zero-extended bit.
inline std::size_t add_fields(ApState& ap, const FieldRef& acc, const FieldRef& addend,
                              BitRef carry, bool addend_signed = true,
                              std::span<const Guard> guards = {}) {
  if (acc.overlaps(addend) || acc.contains(carry) || addend.contains(carry)) {
    throw ContractViolation("add_fields: overlapping fields");
  }
  if (addend.length == 0 || acc.length < addend.length) {
    throw ContractViolation("add_fields: accumulator narrower than addend");
  }
  std::size_t cycles = clear_bit(ap, carry);
  for (std::size_t t = 0; t < acc.length; ++t) {
    if (t < addend.length) {
      cycles += full_add(ap, acc.bit(t), addend.bit(t), carry, guards);
    } else if (addend_signed) {
      cycles += full_add(ap, acc.bit(t), addend.top(), carry, guards);
    } else {
      cycles += propagate_carry(ap, acc.bit(t), carry, guards);
    }
  }
  return cycles;
}

/// Width the product field needs: weights are two's complement; activations
/// unsigned unless `b_signed`.
inline std::size_t product_bits(std::size_t m, std::size_t n, bool b_signed) {
  return m + n + (b_signed ? 1 : 0);
}

/// Closed-form cycle count of multiply_fields.
inline std::uint64_t multiply_cycles(std::size_t m, std::size_t n, std::size_t c_len,
                                     bool b_signed) {
  const std::size_t p = product_bits(m, n, b_signed);
  std::uint64_t cycles = 0;
  for (std::size_t j = 0; j < n; ++j) cycles += 1 + 6 * (p - j);
  if (c_len > p) cycles += 1;
  return cycles;
}

/// Bit-serial shift-add multiply, all rows in parallel: c := w * b.
/// For every activation bit j the sign-extended weight is ANDed with b_j one
/// bit at a time into t[0] and full-added into c at offset j with carry in
/// t[1]; the ripple runs to the top of the product width so no carry is lost.
/// With signed activations the last partial product is subtracted. Above the
/// product width, c is filled with the product's sign bit in one cycle.
/// Precondition: c cleared.
inline std::size_t multiply_fields(ApState& ap, const FieldRef& c, const FieldRef& w,
                                   const FieldRef& b, const FieldRef& t, bool b_signed = false) {
  if (w.length == 0 || b.length == 0) throw ContractViolation("multiply_fields: empty operand");
  if (t.length < 2) throw ContractViolation("multiply_fields: scratch needs 2 bits");
  const std::size_t p = product_bits(w.length, b.length, b_signed);
  if (c.length < p) {
    throw ContractViolation("multiply_fields: product field has " + std::to_string(c.length) +
                            " bits, needs " + std::to_string(p));
  }
  for (const FieldRef* f : {&w, &b, &t}) {
    if (c.overlaps(*f)) throw ContractViolation("multiply_fields: overlapping fields");
  }
  if (t.overlaps(w) || t.overlaps(b)) throw ContractViolation("multiply_fields: overlapping fields");

  const BitRef prod = t.bit(0);
  const BitRef carry = t.bit(1);
  std::size_t cycles = 0;
  for (std::size_t j = 0; j < b.length; ++j) {
    const bool subtract = b_signed && j + 1 == b.length;
    cycles += clear_bit(ap, carry);
    for (std::size_t i = 0; i + j < p; ++i) {
      cycles += bit_and(ap, prod, w.bit(std::min(i, w.length - 1)), b.bit(j));
      cycles += subtract ? full_subtract(ap, c.bit(i + j), prod, carry)
                         : full_add(ap, c.bit(i + j), prod, carry);
    }
  }
  if (c.length > p) {
    KeyMask cmp(ap.width());
    cmp.set(c.bit(p - 1).column, true);
    KeyMask wr(ap.width());
    for (std::size_t i = p; i < c.length; ++i) wr.set(c.bit(i).column, true);
    ap.compare_write(cmp, wr);
    ++cycles;
  }
  return cycles;
}

// ---- bit-parallel lookup tables ------------------------------------------

struct ProductEntry {
  std::int64_t w = 0;
  std::int64_t b = 0;
  std::int64_t product = 0;
};

inline bool fits_bits(std::int64_t v, std::size_t bits, bool is_signed) {
  if (bits >= 64) return is_signed || v >= 0;
  if (is_signed) {
    const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
    const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
    return v >= lo && v <= hi;
  }
  return v >= 0 && v < (std::int64_t{1} << bits);
}

/// Sign-extends the low `bits` of `raw`.
inline std::int64_t to_signed(std::uint64_t raw, std::size_t bits) {
  if (bits == 0) return 0;
  if (bits >= 64) return static_cast<std::int64_t>(raw);
  const std::uint64_t m = std::uint64_t{1} << (bits - 1);
  raw &= (m << 1) - 1;
  return static_cast<std::int64_t>((raw ^ m) - m);
}

/// Every (w, b) combination matched in one compare_write: |table| cycles
/// regardless of the operand wordlengths. Precondition: c cleared.
inline std::size_t lut_multiply(ApState& ap, const FieldRef& c, const FieldRef& w,
                                const FieldRef& b, std::span<const ProductEntry> table) {
  if (c.overlaps(w) || c.overlaps(b) || w.overlaps(b)) {
    throw ContractViolation("lut_multiply: overlapping fields");
  }
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (const auto& e : table) {
    if (!seen.emplace(e.w, e.b).second) throw ContractViolation("lut_multiply: duplicate entry");
    if (!fits_bits(e.product, c.length, true)) {
      throw ContractViolation("lut_multiply: product does not fit result field");
    }
  }
  for (const auto& e : table) {
    KeyMask cmp(ap.width());
    cmp.set_field(w.base, w.length, e.w);
    cmp.set_field(b.base, b.length, e.b);
    KeyMask wr(ap.width());
    wr.set_field(c.base, c.length, e.product);
    ap.compare_write(cmp, wr);
  }
  return table.size();
}

/// Verification mode for lut_multiply: rows whose (w, b) pair is absent from
/// the table and whose true product is nonzero.
inline std::vector<std::size_t> lut_uncovered_rows(const ApState& ap, const FieldRef& w,
                                                   const FieldRef& b,
                                                   std::span<const ProductEntry> table,
                                                   bool b_signed, std::size_t rows) {
  std::set<std::pair<std::int64_t, std::int64_t>> keys;
  for (const auto& e : table) keys.emplace(e.w, e.b);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto wv = to_signed(ap.peek(r, w.base, w.length), w.length);
    const auto raw_b = ap.peek(r, b.base, b.length);
    const auto bv = b_signed ? to_signed(raw_b, b.length) : static_cast<std::int64_t>(raw_b);
    if (wv != 0 && bv != 0 && !keys.contains({wv, bv})) out.push_back(r);
  }
  return out;
}

struct LutEntry {
  std::int64_t in = 0;
  std::int64_t out = 0;
  bool operator==(const LutEntry&) const = default;
};

/// Inputs of the signed src-width domain that the table does not cover.
inline std::vector<std::int64_t> lut_domain_gaps(std::span<const LutEntry> table,
                                                 std::size_t src_bits, bool src_signed) {
  std::set<std::int64_t> have;
  for (const auto& e : table) have.insert(e.in);
  const std::int64_t lo = src_signed ? -(std::int64_t{1} << (src_bits - 1)) : 0;
  const std::int64_t hi =
      src_signed ? (std::int64_t{1} << (src_bits - 1)) - 1 : (std::int64_t{1} << src_bits) - 1;
  std::vector<std::int64_t> gaps;
  for (std::int64_t v = lo; v <= hi; ++v) {
    if (!have.contains(v)) gaps.push_back(v);
  }
  return gaps;
}

/// dst := f(src) per row, one compare_write per table entry.
/// Precondition: dst cleared; rows whose src is not in the table keep dst = 0.
inline std::size_t lut_apply(ApState& ap, const FieldRef& dst, const FieldRef& src,
                             std::span<const LutEntry> table, std::span<const Guard> guards = {}) {
  if (dst.overlaps(src)) throw ContractViolation("lut_apply: overlapping fields");
  std::set<std::int64_t> seen;
  for (const auto& e : table) {
    if (!seen.insert(e.in).second) throw ContractViolation("lut_apply: duplicate input");
    if (!fits_bits(e.out, dst.length, true)) {
      throw ContractViolation("lut_apply: output does not fit destination field");
    }
  }
  for (const auto& e : table) {
    KeyMask cmp(ap.width());
    for (const auto& g : guards) cmp.set(g.column.column, g.value);
    cmp.set_field(src.base, src.length, e.in);
    KeyMask wr(ap.width());
    wr.set_field(dst.base, dst.length, e.out);
    ap.compare_write(cmp, wr);
  }
  return table.size();
}

// ---- tag-shift copies -----------------------------------------------------

struct MovePlan {
  std::size_t count = 0;
  Step step = Step::short_step;
};

/// Short steps below long_step, whole long steps at or above it.
inline MovePlan plan_moves(std::size_t distance, std::size_t long_step) {
  if (distance == 0) throw ContractViolation("move distance must be >= 1");
  if (distance < long_step) return {distance, Step::short_step};
  if (distance % long_step != 0) {
    throw ContractViolation("move distance " + std::to_string(distance) +
                            " is not a multiple of long_step " + std::to_string(long_step));
  }
  return {distance / long_step, Step::long_step};
}

struct BitPair {
  BitRef src;
  BitRef dst;
};

/// dst[i] := src[i + distance] (zero past the bottom), one bit column at a
/// time: compare src bit, shift tags up, write 1. Extra bit pairs travel the
/// same way. Sources are left intact. Precondition: destinations cleared.
inline std::size_t shift_field_copy(ApState& ap, const FieldRef& dst, const FieldRef& src,
                                    std::size_t distance, std::span<const BitPair> extra = {}) {
  if (dst.length != src.length) throw ContractViolation("shift_field_copy: length mismatch");
  if (dst.overlaps(src)) throw ContractViolation("shift_field_copy: overlapping fields");
  const MovePlan plan = plan_moves(distance, ap.long_step());
  std::vector<BitPair> pairs;
  for (std::size_t t = 0; t < src.length; ++t) pairs.push_back({src.bit(t), dst.bit(t)});
  pairs.insert(pairs.end(), extra.begin(), extra.end());

  std::size_t cycles = 0;
  for (const auto& bp : pairs) {
    KeyMask cmp(ap.width());
    cmp.set(bp.src.column, true);
    ap.compare(cmp);
    for (std::size_t s = 0; s < plan.count; ++s) ap.move_tag(Direction::up, plan.step);
    KeyMask wr(ap.width());
    wr.set(bp.dst.column, true);
    ap.write(wr);
    cycles += 2 + plan.count;
  }
  return cycles;
}

}  // namespace aida
