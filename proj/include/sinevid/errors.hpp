#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sinevid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand extents disagree (matmul inner dims, modulation lengths, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// NaN or Inf appeared in a tensor produced by a public operation.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step, std::vector<double> history)
        : Error(what), step_(step), history_(std::move(history)) {}

    std::size_t step() const noexcept { return step_; }
    const std::vector<double>& loss_history() const noexcept { return history_; }

private:
    std::size_t step_;
    std::vector<double> history_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// File format problems. Each failure mode has its own type so callers and
// tests can tell a flipped bit from a short read.
class FormatError : public Error {
public:
    using Error::Error;
};
class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};
class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};
class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};
class InconsistentFramesError : public FormatError {
public:
    using FormatError::FormatError;
};
class EmptyInputError : public FormatError {
public:
    using FormatError::FormatError;
};

class FingerprintError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

} // namespace sinevid
