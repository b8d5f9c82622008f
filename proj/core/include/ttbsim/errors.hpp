#pragma once

#include <stdexcept>
#include <string>

namespace ttbsim {

// Dimension or layout mismatch between operands.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad or inconsistent configuration value.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A tensor slice that cannot fit the buffer partition it must live in.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Simulated functional output diverged from the golden reference.
struct OracleMismatch : std::runtime_error {
  explicit OracleMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ttbsim
