#pragma once

// Area / energy / throughput estimates from instruction activity, using 28nm
// figures: 0.135 um^2 per CAM bitcell, 7.1 um^2 and 5.6 fJ per tag cell,
// 1000 MHz clock.

#include <cstdint>
#include <span>
#include <string>

#include "aida/ap_core.hpp"
#include "aida/error.hpp"

namespace aida {

struct CostConstants {
  double cell_area_um2 = 0.135;
  double tag_area_um2 = 7.1;
  double tag_energy_fJ = 5.6;
  // Uncalibrated placeholders: no per-bitcell energy is published.
  double cell_compare_energy_fJ = 1.0;
  double cell_write_energy_fJ = 1.0;
  double frequency_MHz = 1000.0;
  // Cycles charged per move_tag / if_match in latency estimates. The
  // simulator always counts 1; these let the model explore other assumptions.
  double move_cycles = 1.0;
  double if_match_cycles = 1.0;

  void validate() const {
    for (double v : {cell_area_um2, tag_area_um2, tag_energy_fJ, cell_compare_energy_fJ,
                     cell_write_energy_fJ, move_cycles, if_match_cycles}) {
      if (!(v >= 0.0)) throw ConfigError("cost constants must be nonnegative");
    }
    if (!(frequency_MHz > 0.0)) throw ConfigError("frequency must be positive");
  }
};

struct Estimates {
  double area_mm2 = 0.0;
  double energy_J = 0.0;
  double latency_s = 0.0;
  double inferences_per_s = 0.0;
  double gops = 0.0;
};

/// depth * (width * A_cell + A_tag). Peripheral logic is not included.
inline double estimate_area_mm2(std::size_t depth, std::size_t width, const CostConstants& c) {
  const double um2 = static_cast<double>(depth) *
                     (static_cast<double>(width) * c.cell_area_um2 + c.tag_area_um2);
  return um2 * 1e-6;
}

inline double estimate_energy_J(const Activity& a, const CostConstants& c) {
  const double fJ = static_cast<double>(a.compare_cell_rows) * c.cell_compare_energy_fJ +
                    static_cast<double>(a.write_cell_rows) * c.cell_write_energy_fJ +
                    static_cast<double>(a.tag_row_events) * c.tag_energy_fJ;
  return fJ * 1e-15;
}

// Same model, summed record by record.
inline double estimate_energy_J(std::span<const TraceRecord> log, const CostConstants& c) {
  double fJ = 0.0;
  for (const auto& r : log) {
    fJ += static_cast<double>(r.compare_columns) * static_cast<double>(r.total_rows) *
              c.cell_compare_energy_fJ +
          static_cast<double>(r.write_columns) * static_cast<double>(r.tagged_rows) *
              c.cell_write_energy_fJ +
          static_cast<double>(r.total_rows) * c.tag_energy_fJ;
  }
  return fJ * 1e-15;
}

inline double effective_cycles(const Activity& a, const CostConstants& c) {
  const auto moves = static_cast<double>(a.count(InstrKind::move));
  const auto checks = static_cast<double>(a.count(InstrKind::if_match));
  return static_cast<double>(a.cycles) + moves * (c.move_cycles - 1.0) +
         checks * (c.if_match_cycles - 1.0);
}

/// Latency, throughput and effective GOP/s (2 ops per multiplied pair).
inline Estimates estimate_throughput(const Activity& a, const CostConstants& c,
                                     std::uint64_t nnz_effective) {
  const double cycles = effective_cycles(a, c);
  if (!(cycles > 0.0)) throw ConfigError("throughput needs a positive cycle count");
  Estimates e;
  e.latency_s = cycles / (c.frequency_MHz * 1e6);
  e.inferences_per_s = 1.0 / e.latency_s;
  e.gops = 2.0 * static_cast<double>(nnz_effective) / e.latency_s * 1e-9;
  e.energy_J = estimate_energy_J(a, c);
  return e;
}

}  // namespace aida
