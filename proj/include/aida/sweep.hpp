#pragma once

// Design-space sweeps over weight density and wordlength on synthetic
// layers. Grid points are independent and may run on several threads;
// results are always merged in grid order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "aida/cost_model.hpp"
#include "aida/fc_engine.hpp"

namespace aida {

/// `unique` distinct nonzero values drawn from the signed or unsigned
/// `bits`-wide range (fewer if the range is smaller).
inline std::vector<std::int64_t> make_codebook(unsigned bits, bool is_signed, std::size_t unique,
                                               std::mt19937_64& rng) {
  const std::int64_t lo = is_signed ? -(std::int64_t{1} << (bits - 1)) : 1;
  const std::int64_t hi =
      is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
  const auto span_size = static_cast<std::uint64_t>(hi - lo + 1) - (is_signed ? 1 : 0);
  std::set<std::int64_t> book;
  if (span_size <= unique) {
    for (std::int64_t v = lo; v <= hi; ++v) {
      if (v != 0) book.insert(v);
    }
  } else {
    std::uniform_int_distribution<std::int64_t> dist(lo, hi);
    while (book.size() < unique) {
      const std::int64_t v = dist(rng);
      if (v != 0) book.insert(v);
    }
  }
  return {book.begin(), book.end()};
}

/// Exactly round(density * rows * cols) nonzeros at uniformly random distinct
/// positions, values from a codebook of `unique` weights.
inline SparseMatrix random_sparse_matrix(std::size_t rows, std::size_t cols, double density,
                                         unsigned bits, std::size_t unique, std::mt19937_64& rng) {
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must be in (0, 1]");
  const std::size_t cells = rows * cols;
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(density * static_cast<double>(cells))), 1, cells);
  std::vector<std::size_t> pos(cells);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
    std::swap(pos[i], pos[pick(rng)]);
  }
  const auto book = make_codebook(bits, true, unique, rng);
  std::uniform_int_distribution<std::size_t> which(0, book.size() - 1);
  SparseMatrix m;
  m.n_rows = rows;
  m.n_cols = cols;
  m.value_bits = bits;
  for (std::size_t i = 0; i < count; ++i) {
    m.entries.push_back({pos[i] / cols, pos[i] % cols, book[which(rng)]});
  }
  m.sort();
  return m;
}

inline ActivationList random_activations(std::size_t cols, double density,
                                         const ActivationFormat& fmt, std::size_t unique,
                                         std::mt19937_64& rng) {
  const auto book = make_codebook(fmt.bits, fmt.is_signed, unique, rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> which(0, book.size() - 1);
  std::vector<Activation> acts;
  for (std::size_t c = 0; c < cols; ++c) {
    if (coin(rng) < density) acts.push_back({c, book[which(rng)]});
  }
  return ActivationList(std::move(acts), fmt);
}

struct SweepBase {
  std::size_t rows = 128;
  std::size_t cols = 128;
  double weight_density = 0.1;
  double act_density = 0.3;
  unsigned bits = 8;  // m = n for the sparsity sweep
  std::size_t unique_values = 16;
  ActivationKind activation = ActivationKind::relu;
  std::size_t long_step = 16;
  std::uint64_t seed = 1;
  CostConstants costs;
};

struct SparsityRow {
  double density = 0.0;
  double area_mm2 = 0.0;
  double energy_J = 0.0;
  std::uint64_t cycles = 0;
  std::size_t depth = 0;
};

struct WordlengthRow {
  unsigned bits = 0;
  std::uint64_t cycles_mul = 0;
  std::uint64_t cycles_lut = 0;
  double energy_J = 0.0;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Full inference without decoding the accumulators, so wide k is allowed.
struct InferenceCost {
  StageCycles cycles;
  Activity activity;
};

inline InferenceCost simulate_inference(const LayerConfig& cfg, const ActivationList& acts) {
  ApState ap = prepare_ap(cfg);
  InferenceCost out;
  out.cycles = run_compute_stages(ap, cfg, acts);
  ap.set_stage("extract");
  read_block_starts(ap, cfg.fields, cfg.image);
  out.cycles.extract = cfg.image.block_starts.size();
  ap.set_stage("restore");
  out.cycles.restore = restore_flags(ap, cfg.fields);
  out.activity = ap.activity();
  return out;
}

}  // namespace detail

inline std::vector<SparsityRow> sweep_sparsity(const SweepBase& base, std::span<const double> grid,
                                               unsigned jobs = 1) {
  base.costs.validate();
  std::vector<SparsityRow> rows(grid.size());
  detail::parallel_for(grid.size(), jobs, [&](std::size_t i) {
    std::mt19937_64 wrng(base.seed);
    std::mt19937_64 arng(base.seed + 1);
    LayerSpec spec;
    spec.weight_bits = spec.act_bits = base.bits;
    spec.block_bound = base.cols;
    spec.activation = base.activation;
    spec.long_step = base.long_step;
    const auto acts = random_activations(base.cols, base.act_density, {base.bits, false, 0},
                                         base.unique_values, arng);
    const auto cfg = make_layer(
        random_sparse_matrix(base.rows, base.cols, grid[i], base.bits, base.unique_values, wrng),
        spec);
    const auto cost = detail::simulate_inference(cfg, acts);
    rows[i] = {grid[i], estimate_area_mm2(cfg.image.depth(), cfg.fields.width, base.costs),
               estimate_energy_J(cost.activity, base.costs), cost.activity.cycles,
               cfg.image.depth()};
  });
  return rows;
}

inline std::vector<WordlengthRow> sweep_wordlength(const SweepBase& base,
                                                   std::span<const unsigned> grid,
                                                   unsigned jobs = 1) {
  base.costs.validate();
  for (unsigned q : grid) {
    if (q == 0 || q > 32) throw ConfigError("wordlength must be in [1, 32]");
  }
  std::vector<WordlengthRow> rows(grid.size());
  detail::parallel_for(grid.size(), jobs, [&](std::size_t i) {
    const unsigned q = grid[i];
    std::mt19937_64 wrng(base.seed);
    std::mt19937_64 arng(base.seed + 1);
    LayerSpec spec;
    spec.weight_bits = spec.act_bits = q;
    spec.block_bound = base.cols;
    spec.activation = base.activation;
    spec.long_step = base.long_step;
    const auto acts =
        random_activations(base.cols, base.act_density, {q, false, 0}, base.unique_values, arng);
    auto cfg = make_layer(
        random_sparse_matrix(base.rows, base.cols, base.weight_density, q, base.unique_values, wrng),
        spec);
    const auto serial = detail::simulate_inference(cfg, acts);
    cfg.spec.multiply = MultiplyMode::lut;
    const auto lut = detail::simulate_inference(cfg, acts);
    rows[i] = {q, serial.cycles.multiply, lut.cycles.multiply,
               estimate_energy_J(serial.activity, base.costs)};
  });
  return rows;
}

inline std::string format_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string to_csv(std::span<const SparsityRow> rows) {
  std::string out = "density,area_mm2,energy_per_inference_J,cycles\n";
  for (const auto& r : rows) {
    out += format_sci(r.density) + "," + format_sci(r.area_mm2) + "," + format_sci(r.energy_J) +
           "," + std::to_string(r.cycles) + "\n";
  }
  return out;
}

inline std::string to_csv(std::span<const WordlengthRow> rows) {
  std::string out = "wordlength,cycles_mul,cycles_lut,energy_per_inference_J\n";
  for (const auto& r : rows) {
    out += std::to_string(r.bits) + "," + std::to_string(r.cycles_mul) + "," +
           std::to_string(r.cycles_lut) + "," + format_sci(r.energy_J) + "\n";
  }
  return out;
}

}  // namespace aida
