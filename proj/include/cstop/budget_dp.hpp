#pragma once

#include "cstop/envelope.hpp"
#include "cstop/measure.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/tree.hpp"

#include <optional>
#include <vector>

namespace cstop {

/// Backward induction for a tree with exactly one inequality constraint.
struct DpTable {
    std::vector<ConcaveEnvelope> value;         // V(v, .) per node
    std::vector<ConcaveEnvelope> continuation;  // combined children envelope; empty at leaves
};

/// Errors: UnsupportedConstraintShape, NonFiniteConstraintAccrual, NonFinite (reward).
DpTable dp_solve(const TreeInstance& tree, Execution exec = Execution::Serial);

/// V(root, y). Errors: as dp_solve, plus BudgetBelowDomain.
Rational dp_value(const TreeInstance& tree, const ExtendedReal& y);

ConcaveEnvelope root_envelope(const TreeInstance& tree);

struct DpPolicy {
    Rational value;
    StoppingMeasure measure;
    /// Conditional remaining budget assigned at each reached node.
    std::vector<std::optional<Rational>> budget;
};

/// An attaining stopping measure read off the table's vertex structure.
DpPolicy dp_policy(const TreeInstance& tree, const DpTable& table, const ExtendedReal& y);

}  // namespace cstop
