#pragma once

#include <stdexcept>
#include <string>

namespace ionsim {

// Exit-code classes used by the CLI:
//   2 = invalid input (config/schema/physics validity)
//   3 = numerical non-convergence
//   4 = resource budget exceeded
struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return 1; }
};

struct ValidationError : SimError {
    using SimError::SimError;
    int exit_code() const override { return 2; }
};

// Trap anisotropy too weak for a linear chain (zigzag instability).
struct UnstableConfiguration : ValidationError {
    using ValidationError::ValidationError;
};

// Dressing field too close to a motional mode; the perturbative coupling
// formula diverges there.
struct ResonanceError : ValidationError {
    using ValidationError::ValidationError;
};

struct InsufficientData : ValidationError {
    using ValidationError::ValidationError;
};

struct ConvergenceFailure : SimError {
    using SimError::SimError;
    int exit_code() const override { return 3; }
};

struct StepControlFailure : ConvergenceFailure {
    using ConvergenceFailure::ConvergenceFailure;
};

struct BudgetExceeded : SimError {
    using SimError::SimError;
    int exit_code() const override { return 4; }
};

struct DimensionMismatch : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace ionsim
