#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kahs {

/// Operand sizes disagree, or a transform was asked for an unsupported shape.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Target sparsity K outside [1, N/4).
class InvalidSparsity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model or experiment parameter out of its domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read or parsed. `offset()` is the byte position where
/// parsing stopped (0 when the file could not be opened at all).
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::uint64_t offset = 0)
      : std::runtime_error(what), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace kahs
