#pragma once

// Host-side fixed-point oracle for a layer. Works from the sparse matrix with
// wide integer sums and never touches the associative processor.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aida/fc_engine.hpp"

namespace aida {

__extension__ using wide_int = __int128;

inline bool fits_wide(wide_int v, std::size_t bits) {
  const wide_int lim = static_cast<wide_int>(1) << (bits - 1);
  return v >= -lim && v < lim;
}

inline LayerResult reference_layer(const LayerConfig& cfg, const ActivationList& acts) {
  check_layer_input(cfg, acts);
  std::map<std::size_t, std::int64_t> act;
  for (const auto& a : acts.entries()) act[a.index] = a.value;

  std::map<std::size_t, wide_int> sums;  // every row that has at least one weight
  for (const auto& e : cfg.weights.entries) {
    wide_int& s = sums[e.row];
    auto it = act.find(e.col);
    if (it != act.end()) s += static_cast<wide_int>(e.value) * it->second;
  }

  const std::size_t k = cfg.k();
  LayerResult res;
  std::vector<Activation> outs;
  for (const auto& [row, sum] : sums) {
    if (!fits_wide(sum, k)) {
      throw ConfigError("row " + std::to_string(row) + " accumulator overflows " +
                        std::to_string(k) + " bits");
    }
    auto acc = static_cast<std::int64_t>(sum);
    switch (cfg.spec.activation) {
      case ActivationKind::relu: acc = acc < 0 ? 0 : acc; break;
      case ActivationKind::sigmoid:
      case ActivationKind::tanh: acc = cfg.spec.lut.lookup(acc); break;
      case ActivationKind::none: break;
    }
    res.row_ids.push_back(row);
    res.accumulators.push_back(acc);
    const std::int64_t q = requantize(acc, cfg.spec.requant_shift, cfg.act_format());
    if (q != 0) outs.push_back({row, q});
  }
  res.outputs = ActivationList(std::move(outs), cfg.act_format());
  return res;
}

inline NetworkResult reference_network(std::span<const LayerConfig> layers,
                                       const ActivationList& input) {
  check_network(layers, input);
  NetworkResult net;
  ActivationList acts = input;
  for (const auto& cfg : layers) {
    LayerResult res = reference_layer(cfg, acts);
    acts = res.outputs;
    net.layers.push_back(std::move(res));
  }
  net.output = acts;
  return net;
}

}  // namespace aida
