#pragma once

#include <stdexcept>
#include <string>

namespace selftomo {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Generic precondition / invariant violation on an input value.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bloch vector too long to describe a physical state.
class InvalidStateError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Bloch vector too long to describe a dichotomic POVM.
class InvalidPovmError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Orthogonal matrix with det = -1: no qubit unitary lift exists.
class ImproperRotationError : public Error {
public:
    using Error::Error;
};

/// Joint table violates the identical-detector symmetry beyond tolerance.
class AsymmetricTableError : public Error {
public:
    using Error::Error;
};

/// Setting probabilities imply a squared component below -epsilon.
class InconsistentStatisticsError : public Error {
public:
    using Error::Error;
};

/// All squared components vanish while cross terms do not.
class DegenerateStatisticsError : public Error {
public:
    using Error::Error;
};

/// Requested Fock-space tail bound needs more terms than the hard cap.
class TruncationInfeasibleError : public Error {
public:
    using Error::Error;
};

/// Click table admits no detector parameters in range.
class InconsistentTableError : public Error {
public:
    using Error::Error;
};

/// Source carries no photons, so the efficiency drops out of the statistics.
class EtaUnidentifiableError : public Error {
public:
    using Error::Error;
};

/// Accuracy factor gamma_X or gamma_Y is zero, the sharpening map is undefined.
class InversionUndefinedError : public Error {
public:
    using Error::Error;
};

/// Outcome-vector completeness cannot be restored by any sign assignment.
class InconsistentTomographyError : public Error {
public:
    using Error::Error;
};

/// Bad or missing field in an experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed result/config document.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace selftomo
