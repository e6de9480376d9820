// aida: run, verify, trace and sweep FC layers on the associative processor
// model.
//
//   aida run    --weights l1.mtx,l2.mtx --input x.csv [--out result.json]
//   aida check  --weights l1.mtx --input x.csv
//   aida trace  --weights l1.mtx --input x.csv --trace t.jsonl --limit 100
//   aida sweep  --param sparsity --grid 0.05,0.1,0.2 [--jobs 4]
//
// Exit codes: 0 ok, 1 config/input error, 2 internal contract violation,
// 3 simulator/oracle mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aida/aida.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitContract = 2;
constexpr int kExitMismatch = 3;

struct RunConfig {
  std::string command;
  std::vector<std::string> weights;
  std::string input;
  unsigned wbits = 16;
  unsigned abits = 16;
  std::optional<std::size_t> kbits;
  std::vector<std::string> activation{"relu"};
  int scale = 0;
  bool signed_acts = false;
  std::size_t long_step = 16;
  std::string costs;
  std::uint64_t seed = 1;
  std::string out;
  std::string trace;
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  unsigned jobs = 1;
  std::string param = "sparsity";
  std::string grid;
  unsigned shift = 0;
  std::string lut;
  unsigned lut_window = 8;
  std::string multiply = "bit_serial";
  std::size_t rows = 128;
  std::size_t cols = 128;
  double density = 0.1;
  double act_density = 0.3;
  std::optional<std::size_t> inject_fault;
};

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

// Config files are JSON objects whose keys mirror the long flag names
// (dashes become underscores). Unknown keys are rejected.
void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw aida::ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw aida::ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw aida::ConfigError(path + ": config must be a JSON object");
  static const std::vector<std::string> known = {
      "weights", "input",      "wbits",    "abits", "kbits",        "activation", "scale",
      "signed_acts", "long_step", "costs", "seed",  "out",          "trace",      "limit",
      "jobs",    "param",      "grid",     "shift", "lut",          "lut_window", "multiply",
      "rows",    "cols",       "density",  "act_density"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw aida::ConfigError(path + ": unknown key '" + key + "'");
    }
  }
  try {
    if (j.contains("weights")) {
      c.weights = j["weights"].is_array() ? j["weights"].get<std::vector<std::string>>()
                                          : std::vector<std::string>{j["weights"].get<std::string>()};
    }
    if (j.contains("activation")) {
      c.activation = j["activation"].is_array()
                         ? j["activation"].get<std::vector<std::string>>()
                         : std::vector<std::string>{j["activation"].get<std::string>()};
    }
    if (j.contains("kbits")) c.kbits = j["kbits"].get<std::size_t>();
    if (j.contains("grid")) {
      if (j["grid"].is_array()) {
        std::string g;
        for (const auto& v : j["grid"]) g += (g.empty() ? "" : ",") + v.dump();
        c.grid = g;
      } else {
        c.grid = j["grid"].get<std::string>();
      }
    }
    take(j, "input", c.input);
    take(j, "wbits", c.wbits);
    take(j, "abits", c.abits);
    take(j, "scale", c.scale);
    take(j, "signed_acts", c.signed_acts);
    take(j, "long_step", c.long_step);
    take(j, "costs", c.costs);
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "trace", c.trace);
    take(j, "limit", c.limit);
    take(j, "jobs", c.jobs);
    take(j, "param", c.param);
    take(j, "shift", c.shift);
    take(j, "lut", c.lut);
    take(j, "lut_window", c.lut_window);
    take(j, "multiply", c.multiply);
    take(j, "rows", c.rows);
    take(j, "cols", c.cols);
    take(j, "density", c.density);
    take(j, "act_density", c.act_density);
  } catch (const json::exception& e) {
    throw aida::ConfigError(path + ": " + e.what());
  }
}

aida::CostConstants load_costs(const std::string& path) {
  aida::CostConstants c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw aida::ConfigError("cannot open cost constants file: " + path);
  json j;
  try {
    in >> j;
    for (const auto& [key, value] : j.items()) {
      double* slot = key == "cell_area_um2"            ? &c.cell_area_um2
                     : key == "tag_area_um2"           ? &c.tag_area_um2
                     : key == "tag_energy_fJ"          ? &c.tag_energy_fJ
                     : key == "cell_compare_energy_fJ" ? &c.cell_compare_energy_fJ
                     : key == "cell_write_energy_fJ"   ? &c.cell_write_energy_fJ
                     : key == "frequency_MHz"          ? &c.frequency_MHz
                     : key == "move_cycles"            ? &c.move_cycles
                     : key == "if_match_cycles"        ? &c.if_match_cycles
                                                       : nullptr;
      if (!slot) throw aida::ConfigError(path + ": unknown cost constant '" + key + "'");
      *slot = value.get<double>();
    }
  } catch (const json::exception& e) {
    throw aida::ConfigError(path + ": " + e.what());
  }
  c.validate();
  return c;
}

aida::ActivationKind parse_activation(const std::string& s) {
  if (s == "relu") return aida::ActivationKind::relu;
  if (s == "sigmoid") return aida::ActivationKind::sigmoid;
  if (s == "tanh") return aida::ActivationKind::tanh;
  if (s == "none") return aida::ActivationKind::none;
  throw aida::ConfigError("unknown activation '" + s + "'");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

void validate(const RunConfig& c) {
  if (c.wbits == 0 || c.wbits > 32 || c.abits == 0 || c.abits > 32) {
    throw aida::ConfigError("wordlengths must be in [1, 32]");
  }
  if (c.multiply != "bit_serial" && c.multiply != "lut") {
    throw aida::ConfigError("multiply must be bit_serial or lut");
  }
  if (c.jobs == 0) throw aida::ConfigError("--jobs must be >= 1");
  for (const auto& a : c.activation) parse_activation(a);
}

struct Network {
  std::vector<aida::LayerConfig> layers;
  aida::ActivationList input;
};

Network load_network(const RunConfig& c) {
  if (c.weights.empty()) throw aida::ConfigError("no weight files given (--weights)");
  if (c.input.empty()) throw aida::ConfigError("no activation input given (--input)");
  if (c.activation.size() != 1 && c.activation.size() != c.weights.size()) {
    throw aida::ConfigError("give one activation kind or one per layer");
  }
  std::vector<aida::LutEntry> lut;
  if (!c.lut.empty()) lut = aida::read_lut_file(c.lut);

  Network net;
  for (std::size_t l = 0; l < c.weights.size(); ++l) {
    aida::LayerSpec spec;
    spec.weight_bits = c.wbits;
    spec.act_bits = c.abits;
    spec.signed_acts = c.signed_acts;
    spec.act_frac_bits = c.scale;
    spec.accumulator_bits = c.kbits;
    spec.activation = parse_activation(c.activation.size() == 1 ? c.activation[0] : c.activation[l]);
    spec.lut.window_bits = c.lut_window;
    spec.lut.entries = lut;
    spec.requant_shift = c.shift;
    spec.long_step = c.long_step;
    spec.multiply = c.multiply == "lut" ? aida::MultiplyMode::lut : aida::MultiplyMode::bit_serial;
    if (l + 1 == c.weights.size()) spec.fault_row = c.inject_fault;
    net.layers.push_back(
        aida::make_layer(aida::read_matrix_market_file(c.weights[l], c.wbits, c.scale), spec));
  }
  net.input = aida::read_activations_file(c.input, {c.abits, c.signed_acts, c.scale});
  return net;
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aida::ConfigError("cannot write " + path);
  out << text;
}

json cycles_json(const aida::StageCycles& s) {
  return json{{"broadcast", s.broadcast}, {"multiply", s.multiply}, {"reduce", s.reduce},
              {"activation", s.activation}, {"extract", s.extract}, {"restore", s.restore},
              {"total", s.total()}};
}

json activations_json(const aida::ActivationList& acts) {
  json a = json::array();
  for (const auto& e : acts.entries()) a.push_back({e.index, e.value});
  return a;
}

int cmd_run(const RunConfig& c) {
  const auto costs = load_costs(c.costs);
  const Network net = load_network(c);
  const auto res = aida::run_network(net.layers, net.input);

  json doc;
  doc["layers"] = json::array();
  double area = 0.0;
  std::uint64_t effective = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& cfg = net.layers[l];
    const auto& lr = res.layers[l];
    area += aida::estimate_area_mm2(cfg.image.depth(), cfg.fields.width, costs);
    effective += lr.nnz_effective;
    json acc = json::array();
    for (std::size_t i = 0; i < lr.row_ids.size(); ++i) acc.push_back({lr.row_ids[i], lr.accumulators[i]});
    doc["layers"].push_back(json{{"index", l},
                                 {"rows", cfg.weights.n_rows},
                                 {"cols", cfg.weights.n_cols},
                                 {"nnz", cfg.image.depth()},
                                 {"width", cfg.fields.width},
                                 {"accumulator_bits", cfg.k()},
                                 {"activation", aida::to_string(cfg.spec.activation)},
                                 {"reduce_rounds", lr.reduce_rounds},
                                 {"cycles", cycles_json(lr.cycles)},
                                 {"accumulators", acc},
                                 {"outputs", activations_json(lr.outputs)}});
  }
  doc["outputs"] = activations_json(res.output);
  doc["cycles"] = cycles_json(res.cycles);
  json est;
  est["area_mm2"] = area;
  if (res.activity.cycles > 0) {
    const auto e = aida::estimate_throughput(res.activity, costs, effective);
    est["energy_J"] = e.energy_J;
    est["latency_s"] = e.latency_s;
    est["inferences_per_s"] = e.inferences_per_s;
    est["gops"] = e.gops;
  }
  doc["estimates"] = est;
  emit(c.out, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_check(const RunConfig& c) {
  const Network net = load_network(c);
  const auto sim = aida::run_network(net.layers, net.input);
  const auto ref = aida::reference_network(net.layers, net.input);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& s = sim.layers[l];
    const auto& r = ref.layers[l];
    if (s.row_ids != r.row_ids) {
      std::cerr << "mismatch: layer " << l << ": stored row sets differ\n";
      return kExitMismatch;
    }
    for (std::size_t i = 0; i < s.row_ids.size(); ++i) {
      if (s.accumulators[i] != r.accumulators[i]) {
        std::cerr << "mismatch: layer " << l << " row " << s.row_ids[i]
                  << ": simulator=" << s.accumulators[i] << " reference=" << r.accumulators[i]
                  << "\n";
        return kExitMismatch;
      }
    }
    if (!(s.outputs == r.outputs)) {
      std::cerr << "mismatch: layer " << l << ": extracted activations differ\n";
      return kExitMismatch;
    }
  }
  std::ostringstream msg;
  msg << "check passed: " << net.layers.size() << " layer(s), " << sim.output.size()
      << " nonzero output(s), bit-exact\n";
  emit(c.out, msg.str());
  return kExitOk;
}

int cmd_trace(const RunConfig& c) {
  const Network net = load_network(c);
  const auto res = aida::run_network(net.layers, net.input, true);
  std::ostringstream out;
  aida::write_trace(out, res.trace, c.limit);
  emit(!c.trace.empty() ? c.trace : c.out, out.str());
  return kExitOk;
}

int cmd_sweep(const RunConfig& c) {
  aida::SweepBase base;
  base.rows = c.rows;
  base.cols = c.cols;
  base.weight_density = c.density;
  base.act_density = c.act_density;
  base.bits = c.wbits;
  base.activation = parse_activation(c.activation.front());
  base.long_step = c.long_step;
  base.seed = c.seed;
  base.costs = load_costs(c.costs);
  const auto tokens = split(c.grid);
  if (c.param == "sparsity") {
    std::vector<double> grid;
    for (const auto& t : tokens) {
      auto v = aida::detail::parse_real(t);
      if (!v) throw aida::ConfigError("bad grid value '" + t + "'");
      grid.push_back(*v);
    }
    emit(c.out, aida::to_csv(aida::sweep_sparsity(base, grid, c.jobs)));
  } else if (c.param == "wordlength") {
    std::vector<unsigned> grid;
    for (const auto& t : tokens) {
      auto v = aida::detail::parse_int(t);
      if (!v || *v <= 0) throw aida::ConfigError("bad grid value '" + t + "'");
      grid.push_back(static_cast<unsigned>(*v));
    }
    emit(c.out, aida::to_csv(aida::sweep_wordlength(base, grid, c.jobs)));
  } else {
    throw aida::ConfigError("--param must be sparsity or wordlength");
  }
  return kExitOk;
}

int dispatch(const RunConfig& c) {
  validate(c);
  if (c.command == "run") return cmd_run(c);
  if (c.command == "check") return cmd_check(c);
  if (c.command == "trace") return cmd_trace(c);
  if (c.command == "sweep") return cmd_sweep(c);
  throw aida::ConfigError("unknown command '" + c.command + "' (run|check|sweep|trace)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Associative processor FC-layer simulator"};
  RunConfig flags;
  std::string config_path;
  std::string activation;
  std::string grid;
  std::vector<std::string> weights;
  std::size_t kbits = 0;
  std::size_t fault = 0;

  app.add_option("command", flags.command, "run | check | sweep | trace")->required();
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  auto* o_weights = app.add_option("--weights", weights, "Matrix Market weight files, one per layer")
                        ->delimiter(',');
  auto* o_input = app.add_option("--input", flags.input, "activation CSV or dense vector file");
  auto* o_wbits = app.add_option("--wbits", flags.wbits, "weight wordlength m");
  auto* o_abits = app.add_option("--abits", flags.abits, "activation wordlength n");
  auto* o_kbits = app.add_option("--kbits", kbits, "accumulator wordlength k (>= safe minimum)");
  auto* o_act = app.add_option("--activation", activation, "relu|sigmoid|tanh|none (comma list per layer)");
  auto* o_scale = app.add_option("--scale", flags.scale, "fraction bits for real-valued inputs");
  auto* o_signed = app.add_flag("--signed-acts", flags.signed_acts, "two's complement activations");
  auto* o_long = app.add_option("--long-step", flags.long_step, "long tag-move distance");
  auto* o_costs = app.add_option("--costs", flags.costs, "JSON cost constants");
  auto* o_seed = app.add_option("--seed", flags.seed, "sweep RNG seed");
  auto* o_out = app.add_option("--out", flags.out, "output path (default stdout)");
  auto* o_trace = app.add_option("--trace", flags.trace, "trace output path");
  auto* o_limit = app.add_option("--limit", flags.limit, "maximum trace records");
  auto* o_jobs = app.add_option("--jobs", flags.jobs, "parallel sweep points");
  auto* o_param = app.add_option("--param", flags.param, "sweep parameter: sparsity|wordlength");
  auto* o_grid = app.add_option("--grid", grid, "comma-separated sweep grid");
  auto* o_shift = app.add_option("--shift", flags.shift, "requantization right shift");
  auto* o_lut = app.add_option("--lut", flags.lut, "activation LUT CSV (input,output)");
  auto* o_window = app.add_option("--lut-window", flags.lut_window, "LUT window bits");
  auto* o_mul = app.add_option("--multiply", flags.multiply, "bit_serial|lut");
  auto* o_rows = app.add_option("--rows", flags.rows, "sweep layer rows");
  auto* o_cols = app.add_option("--cols", flags.cols, "sweep layer columns");
  auto* o_density = app.add_option("--density", flags.density, "sweep weight density");
  auto* o_adensity = app.add_option("--act-density", flags.act_density, "sweep activation density");
  auto* o_fault = app.add_option("--inject-fault", fault, "flip one accumulator bit of this row (testing)");
  o_fault->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) apply_config_file(config_path, c);
    c.command = flags.command;
    if (*o_weights) c.weights = weights;
    if (*o_input) c.input = flags.input;
    if (*o_wbits) c.wbits = flags.wbits;
    if (*o_abits) c.abits = flags.abits;
    if (*o_kbits) c.kbits = kbits;
    if (*o_act) c.activation = split(activation);
    if (*o_scale) c.scale = flags.scale;
    if (*o_signed) c.signed_acts = flags.signed_acts;
    if (*o_long) c.long_step = flags.long_step;
    if (*o_costs) c.costs = flags.costs;
    if (*o_seed) c.seed = flags.seed;
    if (*o_out) c.out = flags.out;
    if (*o_trace) c.trace = flags.trace;
    if (*o_limit) c.limit = flags.limit;
    if (*o_jobs) c.jobs = flags.jobs;
    if (*o_param) c.param = flags.param;
    if (*o_grid) c.grid = grid;
    if (*o_shift) c.shift = flags.shift;
    if (*o_lut) c.lut = flags.lut;
    if (*o_window) c.lut_window = flags.lut_window;
    if (*o_mul) c.multiply = flags.multiply;
    if (*o_rows) c.rows = flags.rows;
    if (*o_cols) c.cols = flags.cols;
    if (*o_density) c.density = flags.density;
    if (*o_adensity) c.act_density = flags.act_density;
    if (*o_fault) c.inject_fault = fault;
    if (c.activation.empty()) throw aida::ConfigError("empty --activation");
    return dispatch(c);
  } catch (const aida::StageError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return e.is_contract() ? kExitContract : kExitConfig;
  } catch (const aida::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const aida::ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitContract;
  } catch (const aida::VerificationError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitContract;
  }
}
