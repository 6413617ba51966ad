#include "cstop/stopping_rules.hpp"

#include "cstop/error.hpp"

#include <algorithm>

namespace cstop {

ThetaProcess theta_of_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule) {
    validate_rule(tree, rule);
    ThetaProcess out;
    out.theta.assign(tree.size(), Rational(0));
    // survive[v] = prod (1 - q) along the root path including v
    std::vector<Rational> survive(tree.size());
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& n = tree.node(id);
        Rational before = n.parent ? survive[*n.parent] : Rational(1);
        survive[id] = before * (1 - rule.q[id]);
        out.theta[id] = 1 - survive[id];
    }
    return out;
}

void validate_theta(const TreeInstance& tree, const ThetaProcess& theta) {
    if (theta.theta.size() != tree.size()) {
        throw Error(ErrorCode::EquivalenceViolation, "theta has the wrong number of nodes");
    }
    for (NodeId id = 0; id < tree.size(); ++id) {
        const Rational& t = theta.theta[id];
        if (t < 0 || t > 1) throw Error(ErrorCode::EquivalenceViolation, "theta outside [0, 1] at node " + std::to_string(id));
        const auto& n = tree.node(id);
        if (n.parent && t < theta.theta[*n.parent]) {
            throw Error(ErrorCode::EquivalenceViolation, "theta decreases at node " + std::to_string(id));
        }
        if (tree.is_leaf(id) && t != 1) {
            throw Error(ErrorCode::EquivalenceViolation, "theta != 1 at depth-N node " + std::to_string(id));
        }
    }
}

NodeId hitting_node(const TreeInstance& tree, const ThetaProcess& theta, NodeId leaf, const Rational& eta) {
    const int N = tree.depth();
    for (int k = 0; k <= N; ++k) {
        NodeId a = tree.ancestor_at(leaf, k);
        if (theta.theta[a] > eta) return a;
    }
    return leaf;
}

std::vector<NodeId> derandomize(const TreeInstance& tree, const ThetaProcess& theta, const Rational& eta) {
    validate_theta(tree, theta);
    if (eta < 0 || eta >= 1) throw Error(ErrorCode::InvalidInstance, "eta must lie in [0, 1)");
    std::vector<NodeId> out;
    out.reserve(tree.leaves().size());
    for (NodeId leaf : tree.leaves()) out.push_back(hitting_node(tree, theta, leaf, eta));
    return out;
}

StoppingMeasure rule_to_measure(const TreeInstance& tree, const RandomizedStoppingRule& rule) {
    validate_rule(tree, rule);
    StoppingMeasure m;
    m.stop.assign(tree.size(), Rational(0));
    m.cont.assign(tree.size(), Rational(0));
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& n = tree.node(id);
        Rational reach = 1;
        if (n.parent) reach = m.cont[*n.parent] * tree.law_at(n.depth - 1)[static_cast<std::size_t>(n.branch)].prob;
        m.stop[id] = reach * rule.q[id];
        m.cont[id] = reach - m.stop[id];
    }
    return m;
}

StoppingMeasure integrate_threshold(const TreeInstance& tree, const ThetaProcess& theta) {
    validate_theta(tree, theta);
    StoppingMeasure m;
    m.stop.assign(tree.size(), Rational(0));
    m.cont.assign(tree.size(), Rational(0));
    const int N = tree.depth();
    std::vector<Rational> cuts;
    for (NodeId leaf : tree.leaves()) {
        const Rational& w = tree.node(leaf).path_prob;
        cuts.assign(1, Rational(0));
        for (int k = 0; k <= N; ++k) cuts.push_back(theta.theta[tree.ancestor_at(leaf, k)]);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            // hitting_node is constant on [cuts[i], cuts[i+1])
            Rational mass = w * (cuts[i + 1] - cuts[i]);
            NodeId hit = hitting_node(tree, theta, leaf, cuts[i]);
            m.stop[hit] += mass;
            for (int k = 0; k < tree.node(hit).depth; ++k) m.cont[tree.ancestor_at(leaf, k)] += mass;
        }
    }
    return m;
}

EquivalenceReport equivalence_check(const TreeInstance& tree, const RandomizedStoppingRule& rule) {
    return equivalence_check(tree, rule, theta_of_rule(tree, rule));
}

EquivalenceReport equivalence_check(const TreeInstance& tree, const RandomizedStoppingRule& rule,
                                    const ThetaProcess& theta) {
    EquivalenceReport r;
    r.via_rule = rule_to_measure(tree, rule);
    r.via_threshold = integrate_threshold(tree, theta);
    BudgetVector budgets = tree.declared_budgets();
    r.audit_rule = audit_measure(tree, r.via_rule, budgets);
    r.audit_threshold = audit_measure(tree, r.via_threshold, budgets);
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (r.via_rule.stop[id] != r.via_threshold.stop[id]) {
            throw Error(ErrorCode::EquivalenceViolation, "stop mass differs at node " + std::to_string(id) + ": " +
                                                             to_string(r.via_rule.stop[id]) + " vs " +
                                                             to_string(r.via_threshold.stop[id]));
        }
    }
    if (r.via_rule.cont != r.via_threshold.cont) {
        throw Error(ErrorCode::EquivalenceViolation, "continuation masses differ");
    }
    if (r.audit_rule.value != r.audit_threshold.value || r.audit_rule.ineq_accrual != r.audit_threshold.ineq_accrual ||
        r.audit_rule.eq_accrual != r.audit_threshold.eq_accrual) {
        throw Error(ErrorCode::EquivalenceViolation, "expectations differ");
    }
    r.pass = true;
    return r;
}

}  // namespace cstop
