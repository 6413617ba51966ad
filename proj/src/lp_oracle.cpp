#include "cstop/lp_oracle.hpp"

#include "cstop/error.hpp"
#include "cstop/simplex.hpp"

#include <limits>

namespace cstop {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
    }
    return "Unknown";
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Layout {
    std::vector<std::size_t> s_col;
    std::vector<std::size_t> u_col;
    std::vector<std::size_t> ineq_row;
    std::vector<std::size_t> eq_row;
    LinearProgram lp;
};

void check_budgets(const TreeInstance& tree, const BudgetVector& budgets) {
    if (budgets.y.size() != tree.num_ineq() || budgets.z.size() != tree.num_eq()) {
        throw Error(ErrorCode::ShapeMismatch, "budget vector has (" + std::to_string(budgets.y.size()) + ", " +
                                                  std::to_string(budgets.z.size()) + ") entries, spec has (" +
                                                  std::to_string(tree.num_ineq()) + ", " +
                                                  std::to_string(tree.num_eq()) + ")");
    }
    for (const auto& y : budgets.y) {
        if (y.is_neg_inf()) throw Error(ErrorCode::InvalidInstance, "inequality budget must be > -inf");
    }
}

/// `forbidden` nodes get no stop variable; `coef` is the per-node stop coefficient.
Layout build_layout(const TreeInstance& tree, const BudgetVector& budgets, const std::vector<bool>& forbidden,
                    const std::vector<Rational>& coef) {
    Layout L;
    const std::size_t n = tree.size();
    L.s_col.assign(n, kNone);
    L.u_col.assign(n, kNone);
    std::size_t cols = 0;
    for (NodeId id = 0; id < n; ++id) {
        if (!forbidden[id]) L.s_col[id] = cols++;
        if (!tree.is_leaf(id)) L.u_col[id] = cols++;
    }
    L.lp.num_vars = cols;
    L.lp.objective.assign(cols, Rational(0));
    for (NodeId id = 0; id < n; ++id) {
        if (L.s_col[id] != kNone) L.lp.objective[L.s_col[id]] = coef[id];
    }
    for (NodeId id = 0; id < n; ++id) {
        LinearProgram::Row row;
        row.sense = LinearProgram::Sense::Equal;
        row.label = "flow:" + std::to_string(id);
        if (L.s_col[id] != kNone) row.coeffs.emplace_back(L.s_col[id], Rational(1));
        if (L.u_col[id] != kNone) row.coeffs.emplace_back(L.u_col[id], Rational(1));
        const auto& node = tree.node(id);
        if (node.parent) {
            const Rational& p = tree.law_at(node.depth - 1)[static_cast<std::size_t>(node.branch)].prob;
            row.coeffs.emplace_back(L.u_col[*node.parent], Rational(-p));
            row.rhs = 0;
        } else {
            row.rhs = 1;
        }
        L.lp.rows.push_back(std::move(row));
    }
    L.ineq_row.assign(tree.num_ineq(), kNone);
    for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
        if (budgets.y[i].is_pos_inf()) continue;
        LinearProgram::Row row;
        row.sense = LinearProgram::Sense::LessEqual;
        row.rhs = budgets.y[i].finite();
        row.label = "ineq:" + std::to_string(i);
        for (NodeId id = 0; id < n; ++id) {
            const Rational& g = tree.node(id).accrued.G[i].finite();
            if (L.s_col[id] != kNone && sgn(g) != 0) row.coeffs.emplace_back(L.s_col[id], g);
        }
        if (row.coeffs.empty() && row.rhs >= 0) continue;
        L.ineq_row[i] = L.lp.rows.size();
        L.lp.rows.push_back(std::move(row));
    }
    L.eq_row.assign(tree.num_eq(), kNone);
    for (std::size_t i = 0; i < tree.num_eq(); ++i) {
        LinearProgram::Row row;
        row.sense = LinearProgram::Sense::Equal;
        row.rhs = budgets.z[i].finite();
        row.label = "eq:" + std::to_string(i);
        for (NodeId id = 0; id < n; ++id) {
            const Rational& h = tree.node(id).accrued.H[i].finite();
            if (L.s_col[id] != kNone && sgn(h) != 0) row.coeffs.emplace_back(L.s_col[id], h);
        }
        if (row.coeffs.empty() && row.rhs == 0) continue;
        L.eq_row[i] = L.lp.rows.size();
        L.lp.rows.push_back(std::move(row));
    }
    return L;
}

StoppingMeasure extract_measure(const TreeInstance& tree, const Layout& L, const LpSolution& sol) {
    StoppingMeasure m;
    m.stop.assign(tree.size(), Rational(0));
    m.cont.assign(tree.size(), Rational(0));
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (L.s_col[id] != kNone) m.stop[id] = sol.x[L.s_col[id]];
        if (L.u_col[id] != kNone) m.cont[id] = sol.x[L.u_col[id]];
    }
    return m;
}

void fill_common(const TreeInstance& tree, const Layout& L, const LpSolution& sol, SolveResult& r) {
    r.pivots += sol.pivots;
    r.active_rows = L.lp.rows.size() - tree.size();
    if (sol.status == LpStatus::Infeasible) {
        r.status = SolveStatus::Infeasible;
        r.reason = "phase-one";
        r.certificate.clear();
        for (std::size_t i = 0; i < L.lp.rows.size(); ++i) {
            if (sgn(sol.farkas[i]) != 0) r.certificate.emplace_back(L.lp.rows[i].label, sol.farkas[i]);
        }
        return;
    }
    if (sol.status == LpStatus::Unbounded) {
        // The flow polytope is bounded; reaching this is a solver defect.
        throw std::logic_error("stopping-measure LP reported unbounded");
    }
    r.status = SolveStatus::Optimal;
    r.measure = extract_measure(tree, L, sol);
    r.ineq_duals.assign(tree.num_ineq(), Rational(0));
    r.eq_duals.assign(tree.num_eq(), Rational(0));
    for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
        if (L.ineq_row[i] != kNone) r.ineq_duals[i] = sol.duals[L.ineq_row[i]];
    }
    for (std::size_t i = 0; i < tree.num_eq(); ++i) {
        if (L.eq_row[i] != kNone) r.eq_duals[i] = sol.duals[L.eq_row[i]];
    }
    r.randomized_nodes = 0;
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (sgn(r.measure.stop[id]) > 0 && sgn(r.measure.cont[id]) > 0) ++r.randomized_nodes;
    }
}

struct Prepared {
    bool infinite_target = false;
};

Prepared prepare(const TreeInstance& tree, const BudgetVector& budgets) {
    check_budgets(tree, budgets);
    Prepared p;
    for (const auto& z : budgets.z) {
        if (!z.is_finite()) p.infinite_target = true;
    }
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& acc = tree.node(id).accrued;
        for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
            if (!budgets.y[i].is_pos_inf() && !acc.G[i].is_finite()) {
                throw Error(ErrorCode::NonFiniteConstraintAccrual, "G_" + std::to_string(i) + " is infinite at node " +
                                                                       std::to_string(id));
            }
        }
        for (std::size_t i = 0; i < tree.num_eq(); ++i) {
            if (!acc.H[i].is_finite()) {
                throw Error(ErrorCode::NonFiniteConstraintAccrual, "H_" + std::to_string(i) + " is infinite at node " +
                                                                       std::to_string(id));
            }
        }
    }
    return p;
}

SolveResult infinite_target_result() {
    SolveResult r;
    r.status = SolveStatus::Infeasible;
    r.reason = "infinite-equality-target";
    return r;
}

}  // namespace

SolveResult solve_with_objective(const TreeInstance& tree, const BudgetVector& budgets,
                                 const std::vector<Rational>& stop_payoff) {
    if (stop_payoff.size() != tree.size()) throw Error(ErrorCode::ShapeMismatch, "objective size mismatch");
    if (prepare(tree, budgets).infinite_target) return infinite_target_result();
    Layout L = build_layout(tree, budgets, std::vector<bool>(tree.size(), false), stop_payoff);
    LpSolution sol = solve_lp(L.lp);
    SolveResult r;
    fill_common(tree, L, sol, r);
    if (r.status == SolveStatus::Optimal) r.value = sol.objective;
    return r;
}

SolveResult solve_weak(const TreeInstance& tree, const BudgetVector& budgets) {
    if (prepare(tree, budgets).infinite_target) return infinite_target_result();

    const std::size_t n = tree.size();
    std::vector<bool> neg(n, false), pos(n, false);
    std::vector<Rational> coef(n, Rational(0));
    bool any_neg = false, any_pos = false;
    for (NodeId id = 0; id < n; ++id) {
        const auto& node = tree.node(id);
        ExtendedReal c = node.accrued.F + ExtendedReal(node.terminal);
        if (c.is_neg_inf()) {
            neg[id] = any_neg = true;
        } else if (c.is_pos_inf()) {
            pos[id] = any_pos = true;
        } else {
            coef[id] = c.finite();
        }
    }

    SolveResult r;
    if (any_pos) {
        std::vector<Rational> indicator(n, Rational(0));
        for (NodeId id = 0; id < n; ++id) {
            if (pos[id]) indicator[id] = 1;
        }
        Layout L = build_layout(tree, budgets, neg, indicator);
        LpSolution sol = solve_lp(L.lp);
        if (sol.status == LpStatus::Optimal && sgn(sol.objective) > 0) {
            fill_common(tree, L, sol, r);
            r.value = ExtendedReal::pos_inf();
            return r;
        }
    }

    std::vector<bool> excluded(n, false);
    for (NodeId id = 0; id < n; ++id) excluded[id] = neg[id] || pos[id];
    Layout L = build_layout(tree, budgets, excluded, coef);
    LpSolution sol = solve_lp(L.lp);
    fill_common(tree, L, sol, r);
    if (r.status == SolveStatus::Optimal) {
        r.value = sol.objective;
        return r;
    }
    if (any_neg) {
        // Feasible only by charging a -inf node: the value is -inf.
        std::vector<bool> none(n, false);
        std::vector<Rational> zero(n, Rational(0));
        for (NodeId id = 0; id < n; ++id) none[id] = pos[id];
        Layout F = build_layout(tree, budgets, none, zero);
        LpSolution fsol = solve_lp(F.lp);
        if (fsol.status == LpStatus::Optimal) {
            SolveResult neg_result;
            fill_common(tree, F, fsol, neg_result);
            neg_result.value = ExtendedReal::neg_inf();
            return neg_result;
        }
    }
    r.value = ExtendedReal::neg_inf();
    return r;
}

RandomizedStoppingRule measure_to_rule(const TreeInstance& tree, const StoppingMeasure& m) {
    RandomizedStoppingRule rule;
    rule.q.assign(tree.size(), Rational(1));
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (tree.is_leaf(id)) continue;
        Rational reach = m.stop[id] + m.cont[id];
        if (sgn(reach) > 0) rule.q[id] = m.stop[id] / reach;
    }
    return rule;
}

RobustResult solve_robust(std::span<const TreeInstance> family, const BudgetVector& budgets) {
    if (family.empty()) throw Error(ErrorCode::EmptyFamily, "robust solve needs at least one model");
    RobustResult out;
    for (std::size_t a = 0; a < family.size(); ++a) {
        out.members.push_back(solve_weak(family[a], budgets));
        const SolveResult& r = out.members.back();
        if (r.status != SolveStatus::Optimal) continue;
        if (!out.argmax || r.value > out.members[*out.argmax].value) out.argmax = a;
    }
    if (out.argmax) {
        out.best = out.members[*out.argmax];
    } else {
        out.best.status = SolveStatus::Infeasible;
        out.best.reason = "every model infeasible";
    }
    return out;
}

}  // namespace cstop
