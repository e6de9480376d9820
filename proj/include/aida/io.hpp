#pragma once

// File formats: Matrix Market coordinate weights, activation vectors (sparse
// "index,value" CSV or one dense value per line), LUT tables ("input,output"
// CSV) and the line-delimited JSON instruction trace.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aida/acsr.hpp"
#include "aida/ap_core.hpp"
#include "aida/fc_engine.hpp"

namespace aida {

/// round-half-even(value * 2^frac), saturated to `bits`-wide two's complement
/// (or unsigned when !is_signed).
inline std::int64_t quantize(double value, int frac, unsigned bits, bool is_signed = true) {
  const double lo = is_signed ? -std::ldexp(1.0, static_cast<int>(bits) - 1) : 0.0;
  const double hi = is_signed ? std::ldexp(1.0, static_cast<int>(bits) - 1) - 1.0
                              : std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
  const double scaled = std::nearbyint(std::ldexp(value, frac));  // default mode: ties-to-even
  return static_cast<std::int64_t>(std::clamp(scaled, lo, hi));
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<std::int64_t> parse_int(const std::string& tok) {
  std::int64_t v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last) return std::nullopt;
  return v;
}

inline std::optional<double> parse_real(const std::string& tok) {
  std::istringstream in(tok);
  double v = 0.0;
  in >> v;
  if (in.fail()) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  return v;
}

// Integer tokens are taken verbatim, real tokens quantized.
inline std::int64_t number(const std::string& tok, int frac, unsigned bits, bool is_signed,
                           const std::string& where) {
  if (auto i = parse_int(tok)) return *i;
  if (auto r = parse_real(tok)) return quantize(*r, frac, bits, is_signed);
  throw ConfigError(where + ": not a number: '" + tok + "'");
}

}  // namespace detail

/// Reads a coordinate Matrix Market stream (real, integer or pattern;
/// general, symmetric or skew-symmetric).
inline SparseMatrix read_matrix_market(std::istream& in, unsigned value_bits, int frac_bits,
                                       const std::string& name = "matrix") {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
  std::istringstream banner(detail::lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix") {
    throw ConfigError(name + ": missing %%MatrixMarket matrix banner");
  }
  if (format != "coordinate") throw ConfigError(name + ": only coordinate format is supported");
  if (field != "real" && field != "integer" && field != "pattern") {
    throw ConfigError(name + ": unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    throw ConfigError(name + ": unsupported symmetry '" + symmetry + "'");
  }

  std::size_t lineno = 1;
  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      const auto t = detail::trim(out);
      if (!t.empty() && t[0] != '%') {
        out = t;
        return true;
      }
    }
    return false;
  };

  if (!next_data_line(line)) throw ConfigError(name + ": missing size line");
  std::size_t rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream s(line);
    if (!(s >> rows >> cols >> nnz)) throw ConfigError(name + ": bad size line");
  }

  SparseMatrix m;
  m.n_rows = rows;
  m.n_cols = cols;
  m.value_bits = value_bits;
  m.frac_bits = frac_bits;
  for (std::size_t i = 0; i < nnz; ++i) {
    if (!next_data_line(line)) {
      throw ConfigError(name + ": expected " + std::to_string(nnz) + " entries, got " +
                        std::to_string(i));
    }
    std::istringstream s(line);
    std::size_t r = 0, c = 0;
    std::string tok;
    const std::string where = name + ":" + std::to_string(lineno);
    if (!(s >> r >> c)) throw ConfigError(where + ": bad entry");
    if (r == 0 || c == 0 || r > rows || c > cols) throw ConfigError(where + ": index out of range");
    std::int64_t v = 1;
    if (field != "pattern") {
      if (!(s >> tok)) throw ConfigError(where + ": missing value");
      if (field == "integer") {
        auto iv = detail::parse_int(tok);
        if (!iv) throw ConfigError(where + ": not an integer: '" + tok + "'");
        v = *iv;
      } else {
        v = detail::number(tok, frac_bits, value_bits, true, where);
      }
    }
    if (v == 0) continue;
    m.entries.push_back({r - 1, c - 1, v});
    if (symmetry != "general" && r != c) {
      m.entries.push_back({c - 1, r - 1, symmetry == "skew-symmetric" ? -v : v});
    }
  }
  m.sort();
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].row == m.entries[i - 1].row && m.entries[i].col == m.entries[i - 1].col) {
      throw ConfigError(name + ": duplicate entry (" + std::to_string(m.entries[i].row + 1) + ", " +
                        std::to_string(m.entries[i].col + 1) + ")");
    }
  }
  return m;
}

inline SparseMatrix read_matrix_market_file(const std::string& path, unsigned value_bits,
                                            int frac_bits) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights file: " + path);
  return read_matrix_market(in, value_bits, frac_bits, path);
}

inline void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
  for (const auto& e : m.entries) out << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
}

/// "index,value" lines (optional header) or one dense value per line.
inline ActivationList read_activations(std::istream& in, const ActivationFormat& fmt,
                                       const std::string& name = "activations") {
  std::vector<Activation> acts;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dense_index = 0;
  std::optional<bool> sparse;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto comma = t.find(',');
    const bool is_sparse = comma != std::string::npos;
    if (is_sparse && !sparse && !detail::parse_int(detail::trim(t.substr(0, comma)))) {
      sparse = true;  // header
      continue;
    }
    if (sparse && *sparse != is_sparse) throw ConfigError(where + ": mixed sparse and dense lines");
    sparse = is_sparse;
    if (is_sparse) {
      const auto idx = detail::parse_int(detail::trim(t.substr(0, comma)));
      if (!idx || *idx < 0) throw ConfigError(where + ": bad index");
      const auto v = detail::number(detail::trim(t.substr(comma + 1)), fmt.frac_bits, fmt.bits,
                                    fmt.is_signed, where);
      acts.push_back({static_cast<std::size_t>(*idx), v});
    } else {
      acts.push_back(
          {dense_index++, detail::number(t, fmt.frac_bits, fmt.bits, fmt.is_signed, where)});
    }
  }
  return ActivationList(std::move(acts), fmt);
}

inline ActivationList read_activations_file(const std::string& path, const ActivationFormat& fmt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open activation file: " + path);
  return read_activations(in, fmt, path);
}

inline std::vector<LutEntry> read_lut(std::istream& in, const std::string& name = "lut") {
  std::vector<LutEntry> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto comma = t.find(',');
    const std::string where = name + ":" + std::to_string(lineno);
    if (comma == std::string::npos) throw ConfigError(where + ": expected input,output");
    const auto a = detail::parse_int(detail::trim(t.substr(0, comma)));
    const auto b = detail::parse_int(detail::trim(t.substr(comma + 1)));
    if (!a || !b) {
      if (table.empty() && lineno == 1) continue;  // header
      throw ConfigError(where + ": expected integers");
    }
    table.push_back({*a, *b});
  }
  return table;
}

inline std::vector<LutEntry> read_lut_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open LUT file: " + path);
  return read_lut(in, path);
}

inline std::string trace_line(const TraceRecord& r) {
  std::string s = "{\"seq\":" + std::to_string(r.seq) + ",\"kind\":\"" +
                  std::string(to_string(r.kind)) + "\",\"stage\":\"" + std::string(r.stage) +
                  "\",\"compare_columns\":" + std::to_string(r.compare_columns) +
                  ",\"write_columns\":" + std::to_string(r.write_columns) +
                  ",\"tagged_rows\":" + std::to_string(r.tagged_rows) +
                  ",\"total_rows\":" + std::to_string(r.total_rows) + "}";
  return s;
}

/// Writes at most `limit` records, one JSON object per line.
inline std::size_t write_trace(std::ostream& out, std::span<const TraceRecord> log,
                               std::size_t limit) {
  const std::size_t n = std::min(limit, log.size());
  for (std::size_t i = 0; i < n; ++i) out << trace_line(log[i]) << '\n';
  return n;
}

}  // namespace aida
