#pragma once

#include <stdexcept>
#include <string>

namespace switchq {

// Parameter or configuration violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The requested quantity is undefined in the given parameter regime
// (e.g. an FPT mean when absorption is not certain).
class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// The characteristic polynomial has (numerically) coincident roots, so the
// mixture coefficients are not computable.
class ConfluentRootsError : public RegimeError {
public:
    using RegimeError::RegimeError;
};

// An iterative numerical scheme failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace switchq
