#pragma once

#include <stdexcept>
#include <string>

namespace droplet {

// Input outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Result magnitude not representable in double (overflow or underflow).
struct OverflowError : std::runtime_error {
    explicit OverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative refinement failed to reach its stopping criteria.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Root certification found fewer roots than the contour count requires.
struct MissedRootError : std::runtime_error {
    explicit MissedRootError(const std::string& msg) : std::runtime_error(msg) {}
};

// Query point outside the range covered by a precomputed table.
struct RangeError : std::runtime_error {
    explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Perturbative rate formula applied in the strong-coupling regime.
struct RegimeError : std::runtime_error {
    explicit RegimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text input (config files, serialized tables).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input with an out-of-bounds or inconsistent value.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace droplet
