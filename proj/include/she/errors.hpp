#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace she {

/// Argument outside the mathematical domain of an operation (t <= 0, etc.).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A closed-form evaluator would exceed the double exponent range.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// A documented precondition of an experiment or scheme does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Requested field would not fit the configured memory budget.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// A Monte-Carlo estimate cannot be trusted (too few samples, overflow).
class ReliabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One replica produced a non-finite value; carries the offending step.
class ReplicaAbort : public std::runtime_error {
public:
    ReplicaAbort(std::int64_t step, std::int64_t cell)
        : std::runtime_error("non-finite solution value at step " + std::to_string(step) +
                             ", cell " + std::to_string(cell)),
          step_(step),
          cell_(cell) {}

    std::int64_t step() const noexcept { return step_; }
    std::int64_t cell() const noexcept { return cell_; }

private:
    std::int64_t step_;
    std::int64_t cell_;
};

}  // namespace she
