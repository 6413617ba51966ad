#pragma once

#include "cstop/rational.hpp"
#include "cstop/tree.hpp"

#include <string>
#include <vector>

namespace cstop {

/// Joint law of (increment path, stopping node) on a tree, as per-node stop
/// mass s and continuation mass u (indexed by NodeId).
///
/// Flow conservation: s(root) + u(root) = 1 and s(v) + u(v) = p_j * u(parent)
/// for the child reached through branch j; u = 0 at depth N.
struct StoppingMeasure {
    std::vector<Rational> stop;
    std::vector<Rational> cont;

    Rational reach(NodeId id) const { return stop[id] + cont[id]; }
    friend bool operator==(const StoppingMeasure&, const StoppingMeasure&) = default;
};

/// Conditional stop probability q per node, given survival to that node.
struct RandomizedStoppingRule {
    std::vector<Rational> q;
    friend bool operator==(const RandomizedStoppingRule&, const RandomizedStoppingRule&) = default;
};

/// Throws RuleShapeMismatch unless the rule has one q in [0, 1] per node and q = 1 at depth N.
void validate_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule);

/// Empty string when valid, otherwise the first violated condition.
std::string measure_violation(const TreeInstance& tree, const StoppingMeasure& m);

struct MeasureAudit {
    bool valid = false;  // flow conservation and sign conditions
    std::string reason;
    ExtendedReal value;
    std::vector<ExtendedReal> ineq_accrual;
    std::vector<ExtendedReal> eq_accrual;
    bool feasible = false;  // valid and every budget row satisfied
};

/// Expected reward and constraint accruals of `m`, checked against `budgets`.
MeasureAudit audit_measure(const TreeInstance& tree, const StoppingMeasure& m, const BudgetVector& budgets);

/// sum_v s(v) * (F(v) + pi(v)) with the extended-real integration convention.
ExtendedReal measure_value(const TreeInstance& tree, const StoppingMeasure& m);

}  // namespace cstop
