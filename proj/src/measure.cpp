#include "cstop/measure.hpp"

#include "cstop/error.hpp"

namespace cstop {

void validate_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule) {
    if (rule.q.size() != tree.size()) {
        throw Error(ErrorCode::RuleShapeMismatch, "rule has " + std::to_string(rule.q.size()) + " entries, tree has " +
                                                      std::to_string(tree.size()) + " nodes");
    }
    for (NodeId id = 0; id < tree.size(); ++id) {
        const Rational& q = rule.q[id];
        if (q < 0 || q > 1) throw Error(ErrorCode::RuleShapeMismatch, "q outside [0, 1] at node " + std::to_string(id));
        if (tree.is_leaf(id) && q != 1) {
            throw Error(ErrorCode::RuleShapeMismatch, "q must be 1 at depth-N node " + std::to_string(id));
        }
    }
}

std::string measure_violation(const TreeInstance& tree, const StoppingMeasure& m) {
    if (m.stop.size() != tree.size() || m.cont.size() != tree.size()) return "measure size does not match tree";
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (m.stop[id] < 0 || m.cont[id] < 0) return "negative mass at node " + std::to_string(id);
        const auto& n = tree.node(id);
        if (tree.is_leaf(id) && m.cont[id] != 0) return "continuation mass at depth-N node " + std::to_string(id);
        Rational inflow = 1;
        if (n.parent) inflow = m.cont[*n.parent] * tree.law_at(n.depth - 1)[static_cast<std::size_t>(n.branch)].prob;
        if (m.stop[id] + m.cont[id] != inflow) return "flow conservation fails at node " + std::to_string(id);
    }
    return {};
}

ExtendedReal measure_value(const TreeInstance& tree, const StoppingMeasure& m) {
    ExtendedReal total = 0;
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (m.stop[id] == 0) continue;
        const auto& n = tree.node(id);
        total += ExtendedReal(m.stop[id]) * (n.accrued.F + ExtendedReal(n.terminal));
    }
    return total;
}

MeasureAudit audit_measure(const TreeInstance& tree, const StoppingMeasure& m, const BudgetVector& budgets) {
    MeasureAudit a;
    a.reason = measure_violation(tree, m);
    a.valid = a.reason.empty();
    if (!a.valid) return a;
    if (budgets.y.size() != tree.num_ineq() || budgets.z.size() != tree.num_eq()) {
        throw Error(ErrorCode::ShapeMismatch, "budget vector does not match the constraint spec");
    }
    a.value = measure_value(tree, m);
    a.ineq_accrual.assign(tree.num_ineq(), ExtendedReal(0));
    a.eq_accrual.assign(tree.num_eq(), ExtendedReal(0));
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (m.stop[id] == 0) continue;
        const auto& n = tree.node(id);
        for (std::size_t i = 0; i < tree.num_ineq(); ++i) a.ineq_accrual[i] += ExtendedReal(m.stop[id]) * n.accrued.G[i];
        for (std::size_t i = 0; i < tree.num_eq(); ++i) a.eq_accrual[i] += ExtendedReal(m.stop[id]) * n.accrued.H[i];
    }
    a.feasible = true;
    for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
        if (a.ineq_accrual[i] > budgets.y[i]) {
            a.feasible = false;
            a.reason = "inequality " + std::to_string(i) + " violated";
        }
    }
    for (std::size_t i = 0; i < tree.num_eq(); ++i) {
        if (a.eq_accrual[i] != budgets.z[i]) {
            a.feasible = false;
            a.reason = "equality " + std::to_string(i) + " violated";
        }
    }
    return a;
}

}  // namespace cstop
