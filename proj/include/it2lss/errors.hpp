#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace it2lss {

// Root of every error raised by the library. `code()` is a stable short tag
// used by the CLI to pick an exit status and fill diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

  // Optional numeric context (e.g. per-family LMI margins) for diagnostics.
  const std::map<std::string, double>& details() const noexcept {
    return details_;
  }
  void add_detail(const std::string& key, double value) { details_[key] = value; }

 private:
  std::string code_;
  std::map<std::string, double> details_;
};

// Bad argument: wrong dimension, out-of-range parameter, malformed table.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input", what) {}
};

// All firing strengths vanish: the state lies outside the modeled region.
class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : Error("degenerate-input", what) {}
};

class PartitionError : public Error {
 public:
  explicit PartitionError(const std::string& what) : Error("partition", what) {}
};

// Query point outside the partitioned state box.
class ExtrapolationError : public Error {
 public:
  explicit ExtrapolationError(const std::string& what)
      : Error("extrapolation", what) {}
};

// LMI assembly referenced an undeclared variable or mismatched blocks.
class AssemblyError : public Error {
 public:
  explicit AssemblyError(const std::string& what) : Error("assembly", what) {}
};

class AssumptionError : public Error {
 public:
  explicit AssumptionError(const std::string& what)
      : Error("assumption", what) {}
};

// γ bisection bracket does not contain a feasible point.
class BracketError : public Error {
 public:
  explicit BracketError(const std::string& what) : Error("bracket", what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error("infeasible", what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error("numerical", what) {}
};

// Simulation state norm left the divergence bound.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what)
      : Error("divergence", what) {}
};

// A trajectory failed its dissipativity check.
class CertificationError : public Error {
 public:
  explicit CertificationError(const std::string& what)
      : Error("certification", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace it2lss
