#pragma once

#include "cstop/measure.hpp"
#include "cstop/rational.hpp"
#include "cstop/tree.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cstop {

enum class SolveStatus { Optimal, Infeasible, Unbounded };
std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    ExtendedReal value = ExtendedReal::neg_inf();
    StoppingMeasure measure;  // when Optimal
    /// Shadow prices d value / d y_i and d value / d z_i; 0 on omitted rows.
    std::vector<Rational> ineq_duals;
    std::vector<Rational> eq_duals;
    /// When Infeasible: "phase-one", "infinite-equality-target".
    std::string reason;
    /// Phase-one Farkas multipliers keyed by row label.
    std::vector<std::pair<std::string, Rational>> certificate;
    /// Constraint rows actually present in the LP.
    std::size_t active_rows = 0;
    /// Nodes with s > 0 and u > 0 in the returned basic solution.
    std::size_t randomized_nodes = 0;
    std::size_t pivots = 0;
};

/// Maximizes E[F + pi] over all stopping measures on `tree` satisfying
/// E[G_i] <= y_i and E[H_i] = z_i. Rows with y_i = +inf are omitted, as are
/// rows whose accrual is identically zero with a satisfied bound.
///
/// Infinite rewards follow the integration convention: any feasible law that
/// must charge a -inf node has value -inf, and positive mass on a +inf node
/// (with no -inf mass) gives +inf.
///
/// Errors: ShapeMismatch (budget dimensions), NonFiniteConstraintAccrual.
SolveResult solve_weak(const TreeInstance& tree, const BudgetVector& budgets);

/// Same feasible set, arbitrary finite stop-payoff coefficient per node.
SolveResult solve_with_objective(const TreeInstance& tree, const BudgetVector& budgets,
                                 const std::vector<Rational>& stop_payoff);

/// q(v) = s(v) / (s(v) + u(v)); q = 1 at unreached nodes and at depth N.
RandomizedStoppingRule measure_to_rule(const TreeInstance& tree, const StoppingMeasure& m);

struct RobustResult {
    SolveResult best;
    std::optional<std::size_t> argmax;  // empty when every member is infeasible
    std::vector<SolveResult> members;
};

/// Max of solve_weak over a finite model family; infeasible members are skipped.
/// Errors: EmptyFamily.
RobustResult solve_robust(std::span<const TreeInstance> family, const BudgetVector& budgets);

}  // namespace cstop
