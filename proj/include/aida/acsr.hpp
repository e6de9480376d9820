#pragma once

// Associative CSR. Values and column indices are those of ordinary CSR; the
// row pointer is replaced by a 2-bit flag stored in every PU:
//   01 first element of a row, 00 middle, 10 last, 11 only element.
// The flag's MSB therefore marks the last PU of a row.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aida/ap_core.hpp"
#include "aida/microcode.hpp"

namespace aida {

struct SparseEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  std::int64_t value = 0;
  bool operator==(const SparseEntry&) const = default;
};

struct SparseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<SparseEntry> entries;
  unsigned value_bits = 16;  // two's complement wordlength m
  int frac_bits = 0;

  std::size_t nnz() const noexcept { return entries.size(); }

  // Row-major order, the order ACSR stores PUs in.
  void sort() {
    std::sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
  }

  bool operator==(const SparseMatrix&) const = default;
};

enum RowFlag : std::uint8_t {
  kFlagMiddle = 0b00,
  kFlagFirst = 0b01,
  kFlagLast = 0b10,
  kFlagSingle = 0b11,
};

inline std::string flag_string(std::uint8_t f) {
  return {static_cast<char>('0' + ((f >> 1) & 1)), static_cast<char>('0' + (f & 1))};
}

struct AcsrImage {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  unsigned value_bits = 16;
  int frac_bits = 0;
  std::vector<std::int64_t> values;
  std::vector<std::size_t> col_index;
  std::vector<std::uint8_t> row_flag;
  std::vector<std::size_t> block_starts;  // first PU of each stored row
  std::vector<std::size_t> row_ids;       // original row index of each block

  std::size_t depth() const noexcept { return values.size(); }

  std::size_t block_length(std::size_t b) const {
    const std::size_t end = b + 1 < block_starts.size() ? block_starts[b + 1] : depth();
    return end - block_starts[b];
  }

  std::size_t max_block_length() const {
    std::size_t best = 0;
    for (std::size_t b = 0; b < block_starts.size(); ++b) best = std::max(best, block_length(b));
    return best;
  }
};

inline AcsrImage encode_acsr(SparseMatrix m) {
  if (m.value_bits == 0 || m.value_bits > 32) {
    throw ConfigError("weight wordlength must be in [1, 32]");
  }
  m.sort();
  AcsrImage img;
  img.n_rows = m.n_rows;
  img.n_cols = m.n_cols;
  img.value_bits = m.value_bits;
  img.frac_bits = m.frac_bits;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (e.row >= m.n_rows || e.col >= m.n_cols) {
      throw QuantizationError(e.row, e.col, "index outside matrix dimensions");
    }
    if (i > 0 && m.entries[i - 1].row == e.row && m.entries[i - 1].col == e.col) {
      throw QuantizationError(e.row, e.col, "duplicate entry");
    }
    if (e.value == 0) throw QuantizationError(e.row, e.col, "explicit zero stored");
    if (!fits_bits(e.value, m.value_bits, true)) {
      throw QuantizationError(e.row, e.col,
                              std::to_string(e.value) + " does not fit " +
                                  std::to_string(m.value_bits) + "-bit two's complement");
    }
    const bool first = i == 0 || m.entries[i - 1].row != e.row;
    const bool last = i + 1 == m.entries.size() || m.entries[i + 1].row != e.row;
    if (first) {
      img.block_starts.push_back(i);
      img.row_ids.push_back(e.row);
    }
    img.values.push_back(e.value);
    img.col_index.push_back(e.col);
    img.row_flag.push_back(static_cast<std::uint8_t>((last ? 0b10 : 0) | (first ? 0b01 : 0)));
  }
  return img;
}

struct FlagViolation {
  std::size_t pu = 0;
  std::string expected;
  std::string actual;
};

/// Checks the flag string against ((01 (00)* 10) | 11)*. Returns the first
/// offending PU; pu == size() means the image ends inside an open row.
inline std::optional<FlagViolation> validate_flags(std::span<const std::uint8_t> flags) {
  bool inside = false;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const std::uint8_t f = flags[i] & 0b11;
    if (!inside) {
      if (f == kFlagFirst) {
        inside = true;
      } else if (f != kFlagSingle) {
        return FlagViolation{i, "01|11", flag_string(f)};
      }
    } else {
      if (f == kFlagLast) {
        inside = false;
      } else if (f != kFlagMiddle) {
        return FlagViolation{i, "00|10", flag_string(f)};
      }
    }
  }
  if (inside) return FlagViolation{flags.size(), "00|10", "end"};
  return std::nullopt;
}

inline std::size_t ceil_log2(std::size_t x) {
  return x <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(x - 1));
}

/// Column layout of one PU.
struct FieldMap {
  FieldRef row_flag;       // bit 0 = LSB (first), bit 1 = MSB (last)
  FieldRef pristine_flag;  // untouched copy of row_flag
  FieldRef col_index;
  FieldRef weight;      // m bits
  FieldRef activation;  // n bits
  FieldRef accumulator; // k bits, sign at the top
  FieldRef scratch;     // product bit, carry
  FieldRef staging;     // k + 1 bits: shifted accumulator, shifted flag MSB
  std::size_t width = 0;

  BitRef flag_lsb() const { return row_flag.bit(0); }
  BitRef flag_msb() const { return row_flag.bit(1); }
  BitRef sign_bit() const { return accumulator.top(); }
  BitRef product_bit() const { return scratch.bit(0); }
  BitRef carry_bit() const { return scratch.bit(1); }
  FieldRef staging_value() const { return {staging.base, accumulator.length, "staging_value"}; }
  BitRef staging_flag() const { return staging.top(); }
};

struct FieldMapOptions {
  std::optional<std::size_t> accumulator_bits;
};

inline std::size_t min_accumulator_bits(std::size_t m, std::size_t n, std::size_t max_block_len) {
  return m + n + ceil_log2(max_block_len) + 1;
}

inline FieldMap build_field_map(std::size_t n_cols, std::size_t m, std::size_t n,
                                std::size_t max_block_len, FieldMapOptions options = {}) {
  if (n_cols == 0 || m == 0 || n == 0 || max_block_len == 0) {
    throw ConfigError("field widths and dimensions must be positive");
  }
  const std::size_t k_min = min_accumulator_bits(m, n, max_block_len);
  std::size_t k = k_min;
  if (options.accumulator_bits) {
    if (*options.accumulator_bits < k_min) {
      throw ConfigError("accumulator width " + std::to_string(*options.accumulator_bits) +
                        " below safe minimum " + std::to_string(k_min));
    }
    k = *options.accumulator_bits;
  }
  FieldMap f;
  std::size_t at = 0;
  auto take = [&](std::size_t len, std::string_view name) {
    FieldRef r{at, len, name};
    at += len;
    return r;
  };
  f.row_flag = take(2, "row_flag");
  f.pristine_flag = take(2, "pristine_flag");
  f.col_index = take(std::max<std::size_t>(1, ceil_log2(n_cols)), "col_index");
  f.weight = take(m, "W");
  f.activation = take(n, "B");
  f.accumulator = take(k, "C");
  f.scratch = take(2, "T");
  f.staging = take(k + 1, "T_staging");
  f.width = at;
  return f;
}

/// Sequential host load, one cycle per PU. B, C and T are written as zero.
inline void load_image(ApState& ap, const AcsrImage& img, const FieldMap& f) {
  if (ap.depth() < img.depth()) {
    throw ConfigError("AP depth " + std::to_string(ap.depth()) + " < image nnz " +
                      std::to_string(img.depth()));
  }
  if (ap.width() < f.width) {
    throw ConfigError("AP width " + std::to_string(ap.width()) + " < layout width " +
                      std::to_string(f.width));
  }
  if (img.value_bits != f.weight.length) throw ConfigError("weight field width mismatch");
  if (img.n_cols > (std::size_t{1} << f.col_index.length)) {
    throw ConfigError("col_index field too narrow");
  }
  for (std::size_t i = 0; i < img.depth(); ++i) {
    KeyMask km(ap.width());
    km.set_field(f.row_flag.base, 2, img.row_flag[i]);
    km.set_field(f.pristine_flag.base, 2, img.row_flag[i]);
    km.set_field(f.col_index.base, f.col_index.length, static_cast<std::int64_t>(img.col_index[i]));
    km.set_field(f.weight.base, f.weight.length, img.values[i]);
    for (const FieldRef* z : {&f.activation, &f.accumulator, &f.scratch, &f.staging}) {
      km.set_field(z->base, z->length, 0);
    }
    ap.load_row(i, km);
  }
}

/// Reads PUs [0, depth) back (one read per PU) and rebuilds the matrix using
/// the host-side row bookkeeping of `img`.
inline SparseMatrix decode_image(ApState& ap, const FieldMap& f, const AcsrImage& img) {
  SparseMatrix m;
  m.n_rows = img.n_rows;
  m.n_cols = img.n_cols;
  m.value_bits = img.value_bits;
  m.frac_bits = img.frac_bits;
  std::vector<std::uint8_t> flags;
  std::vector<std::int64_t> values;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < img.depth(); ++i) {
    const auto row = ap.read_row(i);
    auto field = [&](const FieldRef& r) {
      std::uint64_t v = 0;
      for (std::size_t t = 0; t < r.length; ++t) v |= std::uint64_t{row[r.base + t]} << t;
      return v;
    };
    flags.push_back(static_cast<std::uint8_t>(field(f.pristine_flag)));
    cols.push_back(static_cast<std::size_t>(field(f.col_index)));
    values.push_back(to_signed(field(f.weight), f.weight.length));
  }
  if (auto v = validate_flags(flags)) {
    throw VerificationError("corrupted row flags at PU " + std::to_string(v->pu) + ": expected " +
                            v->expected + ", got " + v->actual);
  }
  std::size_t block = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] & kFlagFirst) {
      if (i > 0) ++block;
      if (block >= img.row_ids.size()) throw VerificationError("more rows than bookkeeping");
    }
    m.entries.push_back({img.row_ids[block], cols[i], values[i]});
  }
  if (!flags.empty() && block + 1 != img.row_ids.size()) {
    throw VerificationError("fewer rows than bookkeeping");
  }
  return m;
}

}  // namespace aida
