#pragma once

#include <stdexcept>
#include <string>

namespace ringbp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A factorization hit a non-positive pivot: the matrix is not positive
/// definite (typically a degenerate channel or sigma2 == 0).
struct NotPositiveDefinite : Error {
    using Error::Error;
};

/// A truncated link has non-positive residual noise power.
struct DegenerateLink : Error {
    using Error::Error;
};

/// An operation requiring a specific alphabet was given another one.
struct AlphabetMismatch : Error {
    using Error::Error;
};

/// An iterative solver did not reach its tolerance within the iteration cap.
struct NoConvergence : Error {
    using Error::Error;
};

/// Estimated quadrature error exceeded the configured bound.
struct QuadratureUnstable : Error {
    using Error::Error;
};

/// A variance formula evaluated negative, flagging model breakdown.
struct NegativeVariance : Error {
    using Error::Error;
};

/// Invalid experiment configuration, with field/line diagnostics.
struct ConfigError : Error {
    using Error::Error;
};

/// Failure reading or writing experiment files.
struct IoError : Error {
    using Error::Error;
};

}  // namespace ringbp
