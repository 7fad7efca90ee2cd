#pragma once

#include <stdexcept>
#include <string>

namespace mzi {

// Bad argument value (non-finite, negative where forbidden, out of range).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (e.g. unnormalized Jones vector).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class CalibrationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration problem; `field()` names the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace mzi
