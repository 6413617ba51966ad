#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cstop {

enum class ErrorCode {
    ParseError,
    NonFinite,
    InvalidBranching,
    InvalidHorizon,
    InvalidInstance,
    WordTooLong,
    NodeNotInTree,
    RuleShapeMismatch,
    EquivalenceViolation,
    EmptyFamily,
    BudgetBelowDomain,
    UnsupportedConstraintShape,
    NonFiniteConstraintAccrual,
    SubproblemInfeasible,
    ShapeMismatch,
    DegreeTooHigh,
    ShapeTooLarge,
    NoInstances,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cstop
