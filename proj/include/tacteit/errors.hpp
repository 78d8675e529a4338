#pragma once

#include <stdexcept>
#include <string>

namespace tacteit {

/// Mesh is not invariant under a requested symmetry.
class SymmetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward or normal-equation factorization failed.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value was passed in the wrong representation (e.g. raw208 where 104 is expected).
class FormError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent dataset container on disk.
class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tacteit
