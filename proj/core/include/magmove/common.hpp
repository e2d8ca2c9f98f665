#pragma once

#include <stdexcept>
#include <string>

namespace magmove {

// Error taxonomy. The CLI maps these onto process exit codes, so keep the
// distinction between "caller broke a contract" and "user config is bad".
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition / shape violations: a bug in the calling code.
struct ContractError : Error {
  using Error::Error;
};

// Invalid user-facing configuration (bad key, violated parameter hypothesis).
struct ConfigError : Error {
  using Error::Error;
};

// Argument outside the representable range (e.g. time outside a trajectory).
struct RangeError : Error {
  using Error::Error;
};

// State outside the admissible set (non-injective deformation etc.).
struct AdmissibilityError : Error {
  using Error::Error;
};

// A runtime monitor or verification check failed.
struct DiagnosticError : Error {
  using Error::Error;
};

}  // namespace magmove
