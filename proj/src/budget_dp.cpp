#include "cstop/budget_dp.hpp"

#include "cstop/error.hpp"

namespace cstop {

namespace {

void check_shape(const TreeInstance& tree) {
    if (tree.num_ineq() != 1 || tree.num_eq() != 0) {
        throw Error(ErrorCode::UnsupportedConstraintShape,
                    "the budget DP handles exactly one inequality and no equalities; got " +
                        std::to_string(tree.num_ineq()) + " and " + std::to_string(tree.num_eq()) +
                        " (use the LP oracle)");
    }
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& n = tree.node(id);
        if (!n.ineq_rate[0].is_finite()) {
            throw Error(ErrorCode::NonFiniteConstraintAccrual, "g is infinite at node " + std::to_string(id));
        }
        if (!n.reward_rate.is_finite()) throw Error(ErrorCode::NonFinite, "f is infinite at node " + std::to_string(id));
    }
}

std::vector<std::pair<Rational, ConcaveEnvelope>> children_of(const TreeInstance& tree, const DpTable& t, NodeId id) {
    const auto& n = tree.node(id);
    const BranchLaw& law = tree.law_at(n.depth);
    std::vector<std::pair<Rational, ConcaveEnvelope>> out;
    out.reserve(n.num_children);
    for (std::size_t j = 0; j < n.num_children; ++j) out.emplace_back(law[j].prob, t.value[n.first_child + j]);
    return out;
}

void solve_node(const TreeInstance& tree, DpTable& t, NodeId id) {
    const auto& n = tree.node(id);
    if (tree.is_leaf(id)) {
        t.value[id] = ConcaveEnvelope::constant(Rational(0), n.terminal, true);
        return;
    }
    auto kids = children_of(tree, t, id);
    t.continuation[id] = combine(kids);
    Rational f_dt = n.reward_rate.finite() * tree.dt();
    Rational g_dt = n.ineq_rate[0].finite() * tree.dt();
    t.value[id] = backstep(n.terminal, f_dt, g_dt, t.continuation[id]);
}

}  // namespace

DpTable dp_solve(const TreeInstance& tree, Execution exec) {
    check_shape(tree);
    DpTable t;
    t.value.resize(tree.size());
    t.continuation.resize(tree.size());
    for (int k = tree.depth(); k >= 0; --k) {
        const std::vector<NodeId> level = tree.nodes_at_depth(k);
        const auto m = static_cast<std::ptrdiff_t>(level.size());
        if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
            for (std::ptrdiff_t i = 0; i < m; ++i) solve_node(tree, t, level[static_cast<std::size_t>(i)]);
        } else {
            for (NodeId id : level) solve_node(tree, t, id);
        }
    }
    return t;
}

Rational dp_value(const TreeInstance& tree, const ExtendedReal& y) {
    return dp_solve(tree).value[tree.root()].value(y);
}

ConcaveEnvelope root_envelope(const TreeInstance& tree) { return dp_solve(tree).value[tree.root()]; }

DpPolicy dp_policy(const TreeInstance& tree, const DpTable& table, const ExtendedReal& y) {
    DpPolicy out;
    out.value = table.value[tree.root()].value(y);
    out.measure.stop.assign(tree.size(), Rational(0));
    out.measure.cont.assign(tree.size(), Rational(0));
    out.budget.assign(tree.size(), std::nullopt);
    std::vector<Rational> reach(tree.size(), Rational(0));
    reach[tree.root()] = 1;
    out.budget[tree.root()] = y.is_pos_inf() ? table.value[tree.root()].vertices().back().x : y.finite();

    for (NodeId id = 0; id < tree.size(); ++id) {
        if (!out.budget[id] || sgn(reach[id]) == 0) continue;
        const auto& n = tree.node(id);
        if (tree.is_leaf(id)) {
            out.measure.stop[id] = reach[id];
            continue;
        }
        const auto& vs = table.value[id].vertices();
        Rational b = *out.budget[id];
        if (b > vs.back().x) b = vs.back().x;
        const Rational g_dt = n.ineq_rate[0].finite() * tree.dt();

        Rational p_stop = 0;
        Rational y_cont;
        std::size_t i = 0;
        while (i + 1 < vs.size() && vs[i + 1].x <= b) ++i;
        if (vs[i].x == b || i + 1 == vs.size()) {
            if (vs[i].stop) {
                p_stop = 1;
            } else {
                y_cont = vs[i].x - g_dt;
            }
        } else {
            const auto& A = vs[i];
            const auto& B = vs[i + 1];
            Rational lambda_a = (B.x - b) / (B.x - A.x);
            if (A.stop) {
                p_stop = lambda_a;
                y_cont = B.x - g_dt;
            } else if (B.stop) {
                p_stop = 1 - lambda_a;
                y_cont = A.x - g_dt;
            } else {
                y_cont = b - g_dt;
            }
        }
        out.measure.stop[id] = reach[id] * p_stop;
        out.measure.cont[id] = reach[id] - out.measure.stop[id];
        if (p_stop == 1) continue;
        auto kids = children_of(tree, table, id);
        Allocation a = allocate(kids, y_cont);
        for (std::size_t j = 0; j < n.num_children; ++j) {
            const NodeId c = n.first_child + j;
            reach[c] = out.measure.cont[id] * kids[j].first;
            out.budget[c] = a.budgets[j];
        }
    }
    return out;
}

}  // namespace cstop
