#ifndef DETEQ_ERRORS_HPP
#define DETEQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace deteq {

/// Malformed or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation requested at (or inside the guard band around) the
/// interpolation threshold d = n or p = n, where the ridgeless
/// equivalents diverge (CLI exit code 3).
struct ThresholdError : std::runtime_error {
    explicit ThresholdError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input outside the mathematical domain of an operation
/// (CLI exit code 3).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A solver or formula failed numerically: no bracket, singular
/// denominator, stability condition violated (CLI exit code 4).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace deteq

#endif
