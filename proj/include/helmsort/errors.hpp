#pragma once

#include <stdexcept>
#include <string>

namespace helmsort {

// Bad user-supplied data: non-SPD technology, malformed fields, infeasible
// sources. Mapped to CLI exit code 2.
struct InvalidInputError : std::runtime_error {
  explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A solver diverged or produced a non-finite result. Mapped to CLI exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace helmsort
