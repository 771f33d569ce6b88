#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvsel {

/// Malformed or inconsistent input (dimensions, labels, files).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a result (singular design, failed factorization).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky factorization hit a non-positive pivot.
class CholeskyError : public NumericalError {
public:
    CholeskyError(std::size_t pivot, double value)
        : NumericalError("Cholesky factorization failed at pivot " + std::to_string(pivot) +
                         " (value " + std::to_string(value) + ")"),
          pivot_(pivot) {}

    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Iterative solver exceeded its iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mvsel
