#pragma once

// Fully-connected layer C = f(W x B) on the associative processor:
//   1. broadcast    every activation is matched against col_index and written
//                   into B of all PUs that hold a weight of that column
//   2. multiply     C := W * B in every PU (bit-serial or LUT)
//   3. reduce       segmented tree sum of each row's products into the row's
//                   first PU, steered by the row flags
//   4. activation   RELU or a LUT function on C
// followed by host extraction of the per-row results and flag restoration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aida/acsr.hpp"
#include "aida/ap_core.hpp"
#include "aida/microcode.hpp"

namespace aida {

// ---- activations ----------------------------------------------------------

struct ActivationFormat {
  unsigned bits = 16;
  bool is_signed = false;
  int frac_bits = 0;

  std::int64_t lo() const { return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0; }
  std::int64_t hi() const {
    return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
  }
  bool operator==(const ActivationFormat&) const = default;
};

struct Activation {
  std::size_t index = 0;
  std::int64_t value = 0;
  bool operator==(const Activation&) const = default;
};

/// Sparse activation vector: unique indices, nonzero in-range values, sorted.
class ActivationList {
 public:
  ActivationList() = default;

  ActivationList(std::vector<Activation> entries, ActivationFormat fmt) : fmt_(fmt) {
    if (fmt.bits == 0 || fmt.bits > 32) throw ConfigError("activation wordlength must be in [1, 32]");
    std::erase_if(entries, [](const Activation& a) { return a.value == 0; });
    std::sort(entries.begin(), entries.end(),
              [](const Activation& a, const Activation& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0 && entries[i - 1].index == entries[i].index) {
        throw ConfigError("duplicate activation index " + std::to_string(entries[i].index));
      }
      if (entries[i].value < fmt.lo() || entries[i].value > fmt.hi()) {
        throw ConfigError("activation " + std::to_string(entries[i].index) + " value " +
                          std::to_string(entries[i].value) + " outside " +
                          std::to_string(fmt.bits) + "-bit range");
      }
    }
    entries_ = std::move(entries);
  }

  const std::vector<Activation>& entries() const noexcept { return entries_; }
  const ActivationFormat& format() const noexcept { return fmt_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void check_indices(std::size_t n_cols) const {
    for (const auto& a : entries_) {
      if (a.index >= n_cols) {
        throw ConfigError("activation index " + std::to_string(a.index) + " >= " +
                          std::to_string(n_cols) + " columns");
      }
    }
  }

  bool operator==(const ActivationList&) const = default;

 private:
  std::vector<Activation> entries_;
  ActivationFormat fmt_;
};

/// Arithmetic right shift with round-half-even, then saturation to `fmt`.
inline std::int64_t requantize(std::int64_t acc, unsigned shift, const ActivationFormat& fmt) {
  if (shift > 62) throw ConfigError("requantization shift too large");
  std::int64_t q = acc;
  if (shift > 0) {
    q = acc >> shift;
    const std::int64_t rem = acc - q * (std::int64_t{1} << shift);
    const std::int64_t half = std::int64_t{1} << (shift - 1);
    if (rem > half || (rem == half && (q & 1) != 0)) ++q;
  }
  return std::clamp(q, fmt.lo(), fmt.hi());
}

// ---- layer configuration --------------------------------------------------

enum class ActivationKind { relu, sigmoid, tanh, none };
enum class MultiplyMode { bit_serial, lut };

inline std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::none: return "none";
  }
  return "?";
}

/// Function table over a signed window of the accumulator. Accumulators
/// outside the window are clamped to its edge before lookup.
struct LutTable {
  unsigned window_bits = 8;
  std::vector<LutEntry> entries;

  std::int64_t window_lo() const { return -(std::int64_t{1} << (window_bits - 1)); }
  std::int64_t window_hi() const { return (std::int64_t{1} << (window_bits - 1)) - 1; }

  std::int64_t lookup(std::int64_t acc) const {
    const std::int64_t v = std::clamp(acc, window_lo(), window_hi());
    for (const auto& e : entries) {
      if (e.in == v) return e.out;
    }
    throw VerificationError("LUT has no entry for " + std::to_string(v));
  }
};

/// Quantized sigmoid/tanh: input x = v / 2^(window/2), output f(x) scaled by
/// 2^(window-1), rounded half-even and saturated to the signed window range.
inline LutTable default_lut(ActivationKind kind, unsigned window_bits = 8) {
  LutTable t;
  t.window_bits = window_bits;
  const double in_scale = std::ldexp(1.0, -static_cast<int>(window_bits / 2));
  const double out_scale = std::ldexp(1.0, static_cast<int>(window_bits) - 1);
  for (std::int64_t v = t.window_lo(); v <= t.window_hi(); ++v) {
    const double x = static_cast<double>(v) * in_scale;
    const double y = kind == ActivationKind::tanh ? std::tanh(x) : 1.0 / (1.0 + std::exp(-x));
    const auto q = static_cast<std::int64_t>(std::nearbyint(y * out_scale));
    t.entries.push_back({v, std::clamp(q, t.window_lo(), t.window_hi())});
  }
  return t;
}

struct LayerSpec {
  unsigned weight_bits = 16;
  unsigned act_bits = 16;
  bool signed_acts = false;
  int act_frac_bits = 0;
  std::optional<std::size_t> accumulator_bits;
  // Size k for rows of up to this many nonzeros instead of the actual maximum
  // (keeps the layout fixed across sparsity sweeps).
  std::optional<std::size_t> block_bound;
  ActivationKind activation = ActivationKind::relu;
  LutTable lut;  // used by sigmoid/tanh; filled with default_lut when empty
  unsigned requant_shift = 0;
  std::size_t long_step = 16;
  MultiplyMode multiply = MultiplyMode::bit_serial;
  // Fault injection: flip the accumulator LSB of this original row before
  // extraction.
  std::optional<std::size_t> fault_row;
};

struct LayerConfig {
  SparseMatrix weights;
  AcsrImage image;
  FieldMap fields;
  LayerSpec spec;

  ActivationFormat act_format() const {
    return {spec.act_bits, spec.signed_acts, spec.act_frac_bits};
  }
  std::size_t k() const { return fields.accumulator.length; }
};

inline bool uses_lut(ActivationKind k) {
  return k == ActivationKind::sigmoid || k == ActivationKind::tanh;
}

inline LayerConfig make_layer(SparseMatrix weights, LayerSpec spec) {
  if (weights.value_bits != spec.weight_bits) {
    throw ConfigError("weight matrix declares " + std::to_string(weights.value_bits) +
                      " bits, layer expects " + std::to_string(spec.weight_bits));
  }
  if (spec.act_bits == 0 || spec.act_bits > 32) throw ConfigError("activation wordlength must be in [1, 32]");
  if (weights.n_rows == 0 || weights.n_cols == 0) throw ConfigError("layer dimensions must be positive");
  LayerConfig cfg;
  cfg.image = encode_acsr(weights);
  weights.sort();
  cfg.weights = std::move(weights);
  const std::size_t max_block =
      std::max<std::size_t>({1, cfg.image.max_block_length(), spec.block_bound.value_or(1)});
  cfg.fields = build_field_map(cfg.weights.n_cols, spec.weight_bits, spec.act_bits, max_block,
                               FieldMapOptions{spec.accumulator_bits});
  if (uses_lut(spec.activation)) {
    if (spec.lut.entries.empty()) {
      const auto w = std::min<std::size_t>(spec.lut.window_bits, cfg.fields.accumulator.length);
      spec.lut = default_lut(spec.activation, static_cast<unsigned>(w));
    }
    if (spec.lut.window_bits == 0 || spec.lut.window_bits > cfg.fields.accumulator.length ||
        spec.lut.window_bits > 16) {
      throw ConfigError("LUT window must be in [1, min(16, k)] bits");
    }
    if (!lut_domain_gaps(spec.lut.entries, spec.lut.window_bits, true).empty()) {
      throw ConfigError("LUT does not cover its " + std::to_string(spec.lut.window_bits) +
                        "-bit window");
    }
    for (const auto& e : spec.lut.entries) {
      if (e.in < spec.lut.window_lo() || e.in > spec.lut.window_hi()) {
        throw ConfigError("LUT input " + std::to_string(e.in) + " outside its window");
      }
      if (!fits_bits(e.out, cfg.fields.accumulator.length, true)) {
        throw ConfigError("LUT output " + std::to_string(e.out) + " does not fit the accumulator");
      }
    }
  }
  cfg.spec = std::move(spec);
  return cfg;
}

// ---- results --------------------------------------------------------------

struct StageCycles {
  std::uint64_t broadcast = 0;
  std::uint64_t multiply = 0;
  std::uint64_t reduce = 0;
  std::uint64_t activation = 0;
  std::uint64_t extract = 0;
  std::uint64_t restore = 0;

  std::uint64_t total() const {
    return broadcast + multiply + reduce + activation + extract + restore;
  }
  StageCycles& operator+=(const StageCycles& o) {
    broadcast += o.broadcast;
    multiply += o.multiply;
    reduce += o.reduce;
    activation += o.activation;
    extract += o.extract;
    restore += o.restore;
    return *this;
  }
  bool operator==(const StageCycles&) const = default;
};

struct LayerResult {
  ActivationList outputs;
  // C of each stored row's first PU after the activation function, in
  // row_ids order (rows without weights are absent and implicitly zero).
  std::vector<std::int64_t> accumulators;
  std::vector<std::size_t> row_ids;
  StageCycles cycles;
  Activity activity;
  std::size_t reduce_rounds = 0;
  std::uint64_t nnz_effective = 0;  // PUs holding a nonzero weight-activation pair
};

// ---- closed-form stage costs ----------------------------------------------

namespace stage_cost {

inline std::uint64_t broadcast(std::size_t nnz_b) { return 1 + nnz_b; }

inline std::uint64_t multiply(const FieldMap& f, bool signed_acts) {
  return 1 + multiply_cycles(f.weight.length, f.activation.length, f.accumulator.length,
                             signed_acts);
}

inline std::uint64_t multiply_lut(std::size_t table_size) { return 1 + table_size; }

inline std::size_t reduce_rounds(std::size_t max_block_len) { return ceil_log2(max_block_len); }

// One round at distance d, including the termination check that precedes it.
inline std::uint64_t reduce_round(std::size_t d, std::size_t k, std::size_t long_step) {
  const MovePlan mv = plan_moves(d, long_step);
  return 2                              // compare '01' + if_match
         + 1                            // clear staging
         + (k + 1) * (2 + mv.count)     // shifted copy of C and the flag MSB
         + 1 + 4 * k                    // gated addition
         + 1;                           // flag update
}

inline std::uint64_t reduce(std::size_t max_block_len, std::size_t k, std::size_t long_step) {
  std::uint64_t c = 2;  // final check
  const std::size_t rounds = reduce_rounds(max_block_len);
  for (std::size_t r = 0; r < rounds; ++r) c += reduce_round(std::size_t{1} << r, k, long_step);
  return c;
}

inline std::uint64_t relu() { return 1; }

inline std::uint64_t lut_activation(std::size_t k, std::size_t window_bits, std::size_t entries) {
  return 1 + 2 * (k - window_bits) + entries + 2 + 1 + k;
}

inline std::uint64_t extract(std::size_t blocks) { return blocks; }

inline std::uint64_t restore() { return 4; }

}  // namespace stage_cost

// ---- stages ---------------------------------------------------------------

/// B := value of the activation whose index equals col_index, else 0.
/// 1 + nnz_B cycles.
inline std::size_t broadcast_activations(ApState& ap, const FieldMap& f,
                                         const ActivationList& acts) {
  const std::size_t max_index = std::size_t{1} << f.col_index.length;
  for (const auto& a : acts.entries()) {
    if (a.index >= max_index) {
      throw ConfigError("activation index " + std::to_string(a.index) +
                        " not representable in col_index");
    }
    if (a.value < acts.format().lo() || a.value > acts.format().hi() ||
        acts.format().bits != f.activation.length) {
      throw ConfigError("activation does not fit the B field");
    }
  }
  std::size_t cycles = clear_field(ap, f.activation);
  for (const auto& a : acts.entries()) {
    KeyMask cmp(ap.width());
    cmp.set_field(f.col_index.base, f.col_index.length, static_cast<std::int64_t>(a.index));
    KeyMask wr(ap.width());
    wr.set_field(f.activation.base, f.activation.length, a.value);
    ap.compare_write(cmp, wr);
    ++cycles;
  }
  return cycles;
}

inline std::size_t multiply_stage(ApState& ap, const FieldMap& f, bool signed_acts) {
  const FieldRef cleared[] = {f.accumulator, f.scratch};
  std::size_t cycles = clear_fields(ap, cleared);
  cycles += multiply_fields(ap, f.accumulator, f.weight, f.activation, f.scratch, signed_acts);
  return cycles;
}

/// Every distinct (weight, nonzero activation value) pair.
inline std::vector<ProductEntry> build_product_table(const AcsrImage& img,
                                                     const ActivationList& acts) {
  std::set<std::int64_t> ws(img.values.begin(), img.values.end());
  std::set<std::int64_t> bs;
  for (const auto& a : acts.entries()) bs.insert(a.value);
  std::vector<ProductEntry> table;
  for (auto w : ws) {
    for (auto b : bs) table.push_back({w, b, w * b});
  }
  return table;
}

inline std::size_t multiply_stage_lut(ApState& ap, const FieldMap& f,
                                      std::span<const ProductEntry> table) {
  const FieldRef cleared[] = {f.accumulator, f.scratch};
  std::size_t cycles = clear_fields(ap, cleared);
  cycles += lut_multiply(ap, f.accumulator, f.weight, f.activation, table);
  return cycles;
}

/// Segmented tree reduction. Round r copies C and the flag MSB from the PU
/// 2^r rows below into the staging field, adds the staged value into C of
/// every PU whose own MSB is still 0, then raises the MSB of every PU that
/// received a set MSB. A row is complete when its first PU reads '11'.
/// Returns the number of rounds.
inline std::size_t soft_reduce(ApState& ap, const FieldMap& f) {
  const std::size_t limit = ceil_log2(ap.depth()) + 1;
  const Guard gate[] = {{f.flag_msb(), false}};
  const BitPair msb_pair[] = {{f.flag_msb(), f.staging_flag()}};
  KeyMask open_rows(ap.width());
  open_rows.set_field(f.row_flag.base, 2, kFlagFirst);

  std::size_t round = 0;
  for (;; ++round) {
    ap.compare(open_rows);
    if (!ap.if_match()) break;
    if (round >= limit) {
      throw VerificationError("soft reduction did not converge after " + std::to_string(limit) +
                              " rounds (row flags corrupted?)");
    }
    const std::size_t d = std::size_t{1} << round;
    clear_field(ap, f.staging);
    shift_field_copy(ap, f.staging_value(), f.accumulator, d, msb_pair);
    add_fields(ap, f.accumulator, f.staging_value(), f.carry_bit(), true, gate);
    KeyMask cmp(ap.width());
    cmp.set(f.staging_flag().column, true);
    KeyMask wr(ap.width());
    wr.set(f.flag_msb().column, true);
    ap.compare_write(cmp, wr);
  }
  return round;
}

/// C := 0 wherever the sign bit is set. One cycle.
inline std::size_t relu_stage(ApState& ap, const FieldMap& f) {
  KeyMask cmp(ap.width());
  cmp.set(f.sign_bit().column, true);
  KeyMask wr(ap.width());
  wr.set_field(f.accumulator.base, f.accumulator.length, 0);
  ap.compare_write(cmp, wr, Overlap::latched);
  return 1;
}

/// C := table(clamp(C)). Overflowing rows are flagged in the scratch bits,
/// the window is looked up into the staging field, and the result is copied
/// back into C bit by bit.
inline std::size_t apply_lut_activation(ApState& ap, const FieldMap& f, const LutTable& table) {
  const std::size_t k = f.accumulator.length;
  const std::size_t w = table.window_bits;
  if (w == 0 || w > k) throw ContractViolation("LUT window wider than the accumulator");
  const BitRef pos = f.product_bit();
  const BitRef neg = f.carry_bit();
  const FieldRef staged = f.staging_value();

  const FieldRef cleared[] = {f.scratch, f.staging};
  std::size_t cycles = clear_fields(ap, cleared);
  for (std::size_t t = w - 1; t + 1 < k; ++t) {
    for (bool sign : {false, true}) {
      KeyMask cmp(ap.width());
      cmp.set(f.sign_bit().column, sign);
      cmp.set(f.accumulator.bit(t).column, !sign);
      KeyMask wr(ap.width());
      wr.set((sign ? neg : pos).column, true);
      ap.compare_write(cmp, wr);
      ++cycles;
    }
  }
  const Guard in_window[] = {{pos, false}, {neg, false}};
  cycles += lut_apply(ap, staged, FieldRef{f.accumulator.base, w, "C_window"}, table.entries,
                      in_window);
  for (bool sign : {false, true}) {
    KeyMask cmp(ap.width());
    cmp.set((sign ? neg : pos).column, true);
    KeyMask wr(ap.width());
    wr.set_field(staged.base, staged.length,
                 table.lookup(sign ? table.window_lo() : table.window_hi()));
    ap.compare_write(cmp, wr);
    ++cycles;
  }
  cycles += clear_field(ap, f.accumulator);
  for (std::size_t t = 0; t < k; ++t) {
    KeyMask cmp(ap.width());
    cmp.set(staged.bit(t).column, true);
    KeyMask wr(ap.width());
    wr.set(f.accumulator.bit(t).column, true);
    ap.compare_write(cmp, wr);
    ++cycles;
  }
  return cycles;
}

/// Raw C bits of every block-start PU, one read per block.
inline std::vector<std::vector<std::uint8_t>> read_block_starts(ApState& ap, const FieldMap& f,
                                                                const AcsrImage& img) {
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(img.block_starts.size());
  for (std::size_t start : img.block_starts) {
    auto row = ap.read_row(start);
    out.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(f.accumulator.base),
                     row.begin() + static_cast<std::ptrdiff_t>(f.accumulator.end()));
  }
  return out;
}

inline std::int64_t decode_accumulator(std::span<const std::uint8_t> bits) {
  if (bits.size() > 63) throw ConfigError("accumulator wider than 63 bits cannot be extracted");
  std::uint64_t raw = 0;
  for (std::size_t t = 0; t < bits.size(); ++t) raw |= std::uint64_t{bits[t]} << t;
  return to_signed(raw, bits.size());
}

struct Extracted {
  std::vector<std::int64_t> accumulators;
  ActivationList outputs;
};

inline Extracted extract_activations(ApState& ap, const FieldMap& f, const AcsrImage& img,
                                     unsigned shift, const ActivationFormat& out_fmt) {
  if (f.accumulator.length > 63) {
    throw ConfigError("accumulator wider than 63 bits cannot be extracted");
  }
  Extracted ex;
  std::vector<Activation> outs;
  const auto rows = read_block_starts(ap, f, img);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const std::int64_t acc = decode_accumulator(rows[b]);
    ex.accumulators.push_back(acc);
    const std::int64_t q = requantize(acc, shift, out_fmt);
    if (q != 0) outs.push_back({img.row_ids[b], q});
  }
  ex.outputs = ActivationList(std::move(outs), out_fmt);
  return ex;
}

/// row_flag := pristine_flag, two passes per flag bit.
inline std::size_t restore_flags(ApState& ap, const FieldMap& f) {
  for (std::size_t t = 0; t < 2; ++t) {
    for (bool v : {true, false}) {
      KeyMask cmp(ap.width());
      cmp.set(f.pristine_flag.bit(t).column, v);
      KeyMask wr(ap.width());
      wr.set(f.row_flag.bit(t).column, v);
      ap.compare_write(cmp, wr);
    }
  }
  return 4;
}

// ---- layer driver ---------------------------------------------------------

/// An AP sized to the layer (depth = nnz) with the weight image loaded and
/// the counters reset.
inline ApState prepare_ap(const LayerConfig& cfg, bool trace = false) {
  if (cfg.image.depth() == 0) throw ConfigError("layer has no nonzero weights");
  ApState ap(cfg.image.depth(), cfg.fields.width, cfg.spec.long_step);
  ap.set_stage("load");
  load_image(ap, cfg.image, cfg.fields);
  ap.reset_counters();
  ap.enable_trace(trace);
  return ap;
}

inline std::uint64_t count_effective_pairs(const AcsrImage& img, const ActivationList& acts) {
  std::set<std::size_t> live;
  for (const auto& a : acts.entries()) live.insert(a.index);
  return static_cast<std::uint64_t>(std::count_if(
      img.col_index.begin(), img.col_index.end(), [&](std::size_t c) { return live.contains(c); }));
}

namespace detail {

template <typename Fn>
std::uint64_t run_stage(ApState& ap, const char* name, Fn&& fn) {
  ap.set_stage(name);
  const std::uint64_t before = ap.cycles();
  try {
    fn();
  } catch (const ContractViolation& e) {
    throw StageError(name, e.what(), true);
  } catch (const ConfigError& e) {
    throw StageError(name, e.what(), false);
  } catch (const VerificationError& e) {
    throw StageError(name, e.what(), true);
  }
  return ap.cycles() - before;
}

}  // namespace detail

inline void check_layer_input(const LayerConfig& cfg, const ActivationList& acts) {
  if (acts.format().bits != cfg.spec.act_bits || acts.format().is_signed != cfg.spec.signed_acts) {
    throw ConfigError("activation format does not match the layer (" +
                      std::to_string(acts.format().bits) + "-bit " +
                      (acts.format().is_signed ? "signed" : "unsigned") + " vs " +
                      std::to_string(cfg.spec.act_bits) + "-bit " +
                      (cfg.spec.signed_acts ? "signed" : "unsigned") + ")");
  }
  acts.check_indices(cfg.weights.n_cols);
}

/// Runs broadcast, multiply, reduce and activation. Leaves results in C.
inline StageCycles run_compute_stages(ApState& ap, const LayerConfig& cfg,
                                      const ActivationList& acts, std::size_t* rounds = nullptr) {
  const FieldMap& f = cfg.fields;
  StageCycles sc;
  sc.broadcast = detail::run_stage(ap, "broadcast", [&] { broadcast_activations(ap, f, acts); });
  sc.multiply = detail::run_stage(ap, "multiply", [&] {
    if (cfg.spec.multiply == MultiplyMode::lut) {
      const auto table = build_product_table(cfg.image, acts);
      multiply_stage_lut(ap, f, table);
    } else {
      multiply_stage(ap, f, cfg.spec.signed_acts);
    }
  });
  sc.reduce = detail::run_stage(ap, "reduce", [&] {
    const std::size_t r = soft_reduce(ap, f);
    if (rounds) *rounds = r;
  });
  sc.activation = detail::run_stage(ap, "activation", [&] {
    switch (cfg.spec.activation) {
      case ActivationKind::relu: relu_stage(ap, f); break;
      case ActivationKind::sigmoid:
      case ActivationKind::tanh: apply_lut_activation(ap, f, cfg.spec.lut); break;
      case ActivationKind::none: break;
    }
  });
  return sc;
}

/// One inference of a layer whose image is already loaded with pristine flags.
inline LayerResult run_layer(ApState& ap, const LayerConfig& cfg, const ActivationList& acts) {
  check_layer_input(cfg, acts);
  const FieldMap& f = cfg.fields;
  const Activity before = ap.activity();
  LayerResult res;
  res.cycles = run_compute_stages(ap, cfg, acts, &res.reduce_rounds);

  if (cfg.spec.fault_row) {
    const auto& ids = cfg.image.row_ids;
    auto it = std::find(ids.begin(), ids.end(), *cfg.spec.fault_row);
    if (it != ids.end()) {
      const std::size_t start = cfg.image.block_starts[static_cast<std::size_t>(it - ids.begin())];
      const std::size_t col = f.accumulator.base;
      ap.poke(start, col, !ap.bit(start, col));
    }
  }

  Extracted ex;
  res.cycles.extract = detail::run_stage(ap, "extract", [&] {
    ex = extract_activations(ap, f, cfg.image, cfg.spec.requant_shift, cfg.act_format());
  });
  res.cycles.restore = detail::run_stage(ap, "restore", [&] { restore_flags(ap, f); });
  res.accumulators = std::move(ex.accumulators);
  res.outputs = std::move(ex.outputs);
  res.row_ids = cfg.image.row_ids;
  res.activity = ap.activity() - before;
  res.nnz_effective = count_effective_pairs(cfg.image, acts);
  return res;
}

// ---- networks -------------------------------------------------------------

struct NetworkResult {
  std::vector<LayerResult> layers;
  ActivationList output;
  StageCycles cycles;
  Activity activity;
  std::vector<TraceRecord> trace;
};

inline void check_network(std::span<const LayerConfig> layers, const ActivationList& input) {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0 && layers[l].weights.n_cols != layers[l - 1].weights.n_rows) {
      throw ConfigError("layer " + std::to_string(l) + " expects " +
                        std::to_string(layers[l].weights.n_cols) + " inputs but layer " +
                        std::to_string(l - 1) + " produces " +
                        std::to_string(layers[l - 1].weights.n_rows));
    }
    if (l > 0 && layers[l].act_format() != layers[l - 1].act_format()) {
      throw ConfigError("layer " + std::to_string(l) + " activation format differs from layer " +
                        std::to_string(l - 1));
    }
  }
  check_layer_input(layers.front(), input);
}

/// Chains layers, one AP per layer. Inter-layer transfer goes through the host
/// (extraction reads, then broadcast), and both are counted.
inline NetworkResult run_network(std::span<const LayerConfig> layers, const ActivationList& input,
                                 bool trace = false) {
  check_network(layers, input);
  NetworkResult net;
  ActivationList acts = input;
  for (const auto& cfg : layers) {
    LayerResult res;
    if (cfg.image.depth() == 0) {
      res.outputs = ActivationList({}, cfg.act_format());
    } else {
      ApState ap = prepare_ap(cfg, trace);
      res = run_layer(ap, cfg, acts);
      if (trace) {
        const auto& log = ap.counters().log;
        const std::uint64_t base = net.trace.size();
        for (auto rec : log) {
          rec.seq += base;
          net.trace.push_back(rec);
        }
      }
    }
    acts = res.outputs;
    net.cycles += res.cycles;
    net.activity += res.activity;
    net.layers.push_back(std::move(res));
  }
  net.output = acts;
  return net;
}

}  // namespace aida
