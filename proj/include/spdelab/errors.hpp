#pragma once

#include <stdexcept>
#include <string>

namespace spdelab {

// Bad user input: grid sizes, presets, declared constants, file schemas.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of an operation (e.g. alpha not in (1,2)).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Runtime numerical failure: overflow, blow-up, non-convergence, bad kernel mass.
// Carries enough context to locate the failing cell/step.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spdelab
