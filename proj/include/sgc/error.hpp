#pragma once

#include <stdexcept>
#include <string>

namespace sgc {

/// Input whose shape does not match the model it is applied to.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad model parameter or bad configuration value.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN or Inf.
class NumericDomainError : public std::runtime_error {
public:
    explicit NumericDomainError(const std::string& what, double time = 0.0)
        : std::runtime_error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Adaptive step size collapsed below the admissible minimum.
class StiffnessError : public NumericDomainError {
public:
    using NumericDomainError::NumericDomainError;
};

}  // namespace sgc

namespace sgc {

/// Malformed or schema-violating experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sgc
