#pragma once

#include <stdexcept>

namespace polydd {

/// Caller passed an argument outside its documented range.
struct parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A mesh or index structure violates a structural requirement
/// (non-conforming traces, bad edge incidence, inconsistent counts).
struct structural_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical operation failed (singular factorization, indefinite
/// direction in CG, recovery identity violated).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An object was used before the setup step that makes it valid.
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace polydd
