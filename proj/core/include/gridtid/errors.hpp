#pragma once

#include <stdexcept>
#include <string>

namespace gridtid {

// Error taxonomy. Validation errors are caller-contract breaches
// (CLI exit code 2), numerical errors are solver/factorization
// failures (exit 3), IO errors map to exit 1.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct SchemaMismatch : ValidationError {
    using ValidationError::ValidationError;
};

struct IncompleteObservation : ValidationError {
    using ValidationError::ValidationError;
};

struct EmptyClass : ValidationError {
    using ValidationError::ValidationError;
};

struct AllSignalsMissing : ValidationError {
    using ValidationError::ValidationError;
};

struct NoSignalsMissing : ValidationError {
    using ValidationError::ValidationError;
};

struct EmptyValidation : ValidationError {
    using ValidationError::ValidationError;
};

struct NoValidTopology : ValidationError {
    using ValidationError::ValidationError;
};

struct DisconnectedLoadWithoutPd : ValidationError {
    using ValidationError::ValidationError;
};

struct FeederSpecError : ValidationError {
    using ValidationError::ValidationError;
};

struct DegenerateClass : ValidationError {
    using ValidationError::ValidationError;
};

struct SingularCovariance : NumericalError {
    using NumericalError::NumericalError;
};

struct NonPositiveDefinite : NumericalError {
    using NumericalError::NumericalError;
};

struct NoConvergence : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace gridtid
