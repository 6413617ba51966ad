#pragma once

#include "cstop/rational.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace cstop {

/// maximize c^T x  subject to  a_i^T x (<= | =) b_i,  x >= 0.
struct LinearProgram {
    enum class Sense { LessEqual, Equal };
    struct Row {
        std::vector<std::pair<std::size_t, Rational>> coeffs;
        Sense sense = Sense::Equal;
        Rational rhs;
        std::string label;
    };

    std::size_t num_vars = 0;
    std::vector<Rational> objective;  // size num_vars
    std::vector<Row> rows;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Rational objective;
    std::vector<Rational> x;
    /// Optimal dual prices, one per row (>= 0 on LessEqual rows).
    std::vector<Rational> duals;
    /// When infeasible: y with y^T A >= 0, y >= 0 on LessEqual rows, y^T b < 0.
    std::vector<Rational> farkas;
    std::size_t pivots = 0;
};

/// Two-phase dense-tableau simplex in exact rational arithmetic with Bland's rule.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace cstop
