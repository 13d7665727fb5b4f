#pragma once

#include <stdexcept>
#include <string>

namespace secest {

// Base class for all library errors. The CLI maps subclasses onto exit codes:
// validation -> 1, infeasible/hypothesis -> 2, numerical -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};
struct DisconnectedGraph : ValidationError {
    using ValidationError::ValidationError;
};
struct UndetectablePair : ValidationError {
    using ValidationError::ValidationError;
};
struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};
struct EmptyTrace : ValidationError {
    using ValidationError::ValidationError;
};
struct EmptySecureSet : ValidationError {
    using ValidationError::ValidationError;
};
struct RequiresCommonCosts : ValidationError {
    using ValidationError::ValidationError;
};

struct InfeasibleBudget : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct NoUndetectableAttack : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct LpInfeasible : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct EmptyFeasibleSet : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct HypothesisViolated : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct GainHypothesisViolated : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct PlanInfeasible : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};

struct EigenFailure : NumericalError {
    using NumericalError::NumericalError;
};
struct NonIntegralVertex : NumericalError {
    using NumericalError::NumericalError;
};
struct SimplexFailure : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace secest
