#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace aida {

// An instruction or microcode precondition was broken by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad geometry, widths, files or input data.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A weight does not fit the declared wordlength.
class QuantizationError : public ConfigError {
 public:
  QuantizationError(std::size_t row, std::size_t col, const std::string& what)
      : ConfigError("value at (" + std::to_string(row) + ", " + std::to_string(col) +
                    "): " + what),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// Simulator output disagrees with the host oracle.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wraps an error raised inside one stage of a layer run.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool contract)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), contract_(contract) {}

  const std::string& stage() const noexcept { return stage_; }
  bool is_contract() const noexcept { return contract_; }

 private:
  std::string stage_;
  bool contract_;
};

}  // namespace aida
