#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnnfilt {

/// Selects between the serial reference kernels and the OpenMP kernels.
/// Both produce bitwise-identical results.
enum class Exec { serial, parallel };

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t got)
      : std::invalid_argument(what + ": expected " + std::to_string(expected) + ", got " +
                              std::to_string(got)) {}
};

inline void check_dims(const char* what, std::size_t expected, std::size_t got) {
  if (expected != got) throw DimensionMismatch(what, expected, got);
}

}  // namespace bnnfilt
