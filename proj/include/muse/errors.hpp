#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace muse {

// Bad or inconsistent configuration (dimension mismatch, non-finite parameter,
// horizon disagreement between process, reward and rate schedule).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Caller broke a documented precondition (empty batch, stage past horizon, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Operation not available for this process kind.
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Exhaustive oracle refused because the tree is too large.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A replicate task threw inside the parallel harness.
class ReplicateFailure : public std::runtime_error {
public:
    ReplicateFailure(std::size_t index, const std::string& what)
        : std::runtime_error("replicate " + std::to_string(index) + " failed: " + what),
          index_(index) {}

    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace muse
