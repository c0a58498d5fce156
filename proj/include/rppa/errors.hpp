#pragma once

#include <stdexcept>
#include <string>

namespace rppa {

// Base for recoverable errors raised by the library proper (as opposed to
// std::invalid_argument, which flags malformed parameters at construction).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not defined for the given variant (e.g. density of a point mass).
class UnsupportedOperation : public DomainError {
public:
    using DomainError::DomainError;
};

// Root bracketing failed: the target function never changes sign.
class NoRootError : public DomainError {
public:
    using DomainError::DomainError;
};

class DimensionMismatch : public DomainError {
public:
    using DomainError::DomainError;
};

// Enumeration refused: the search space exceeds the configured bound.
class InstanceTooLarge : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace rppa
