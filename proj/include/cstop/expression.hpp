#pragma once

#include "cstop/rational.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cstop {

using State = std::vector<Rational>;
/// States on the time grid, oldest first; back() is the current state.
using Path = std::vector<State>;

/// A path functional (t, path-prefix) -> extended real, parsed from text.
///
/// Accepted forms:
///   built-ins   "zero", "const:c", "coord", "sup", "power:a,q,lambda"
///               (power means a*q*t^(q-1) + lambda)
///   arithmetic  + - * / ^ and parentheses over numbers, "inf", and the
///               variables t, x (= x_current), x_sup, x_inf, x[i], sup[i], inf[i]
///   functions   min, max, abs (exact); sqrt, exp, log, sin, cos (evaluated in
///               double and snapped to a rational)
///
/// Integer powers and the four field operations are exact.
class Expression {
public:
    Expression();
    static Expression parse(std::string_view text, std::optional<int> snap_bits = std::nullopt);

    ExtendedReal evaluate(const Rational& t, const Path& path) const;
    /// Evaluates and requires a finite result.
    Rational evaluate_finite(const Rational& t, const Path& path) const;

    const std::string& source() const { return source_; }
    /// True when the expression is literally the constant 0.
    bool is_zero() const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
    std::optional<int> snap_bits_;
};

}  // namespace cstop
