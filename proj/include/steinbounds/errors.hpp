#pragma once

#include <stdexcept>
#include <string>

namespace stein {

// Exit-code classes used by the CLI: validation errors exit 1,
// computation errors exit 2, selftest invariant failures exit 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const noexcept { return "ValidationError"; }
};

class ComputationError : public std::runtime_error {
public:
    explicit ComputationError(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const noexcept { return "ComputationError"; }
};

class InvalidModel : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "InvalidModel"; }
};

class InvalidInput : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "InvalidInput"; }
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "DomainError"; }
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
    const char* kind() const noexcept override { return "ParseError"; }
};

class CapExceeded : public ComputationError {
public:
    using ComputationError::ComputationError;
    const char* kind() const noexcept override { return "CapExceeded"; }
};

class DegenerateModel : public ComputationError {
public:
    using ComputationError::ComputationError;
    const char* kind() const noexcept override { return "DegenerateModel"; }
};

class TooFewSamples : public ComputationError {
public:
    using ComputationError::ComputationError;
    const char* kind() const noexcept override { return "TooFewSamples"; }
};

class ExactUnavailable : public ComputationError {
public:
    using ComputationError::ComputationError;
    const char* kind() const noexcept override { return "ExactUnavailable"; }
};

}  // namespace stein
