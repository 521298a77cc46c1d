#pragma once

#include <stdexcept>
#include <string>

namespace lcs {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can catch a single type and map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (wrong vector length, unknown name, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A point outside the domain of a map, e.g. sigma == 0 for the conic projections.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateFormError : public Error {
 public:
  using Error::Error;
};

/// Structural check failed: boundary of boundary, sheaf compatibility, local closedness.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Equivariant model whose gluing data does not describe a tiling.
class ModelError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcs
