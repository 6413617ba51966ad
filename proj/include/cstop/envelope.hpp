#pragma once

#include "cstop/rational.hpp"

#include <span>
#include <utility>
#include <vector>

namespace cstop {

/// Piecewise-linear, concave, non-decreasing function of a budget, defined on
/// [domain_start, inf) and constant after its last vertex.
///
/// Stored as vertices with strictly increasing x and strictly decreasing,
/// strictly positive slopes between them.
class ConcaveEnvelope {
public:
    struct Vertex {
        Rational x;
        Rational v;
        bool stop = false;  // produced by the stop option in backstep
        friend bool operator==(const Vertex& a, const Vertex& b) { return a.x == b.x && a.v == b.v; }
    };

    ConcaveEnvelope() = default;
    static ConcaveEnvelope constant(const Rational& start, const Rational& value, bool stop = false);
    /// Smallest non-decreasing concave majorant of the points, restricted to
    /// x >= min x. Requires at least one point.
    static ConcaveEnvelope hull(std::vector<Vertex> points);

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const Rational& domain_start() const { return vertices_.front().x; }
    const Rational& max_value() const { return vertices_.back().v; }
    /// Slope of each segment, one fewer than vertices.
    std::vector<Rational> slopes() const;

    /// Errors: BudgetBelowDomain.
    Rational value(const Rational& y) const;
    Rational value(const ExtendedReal& y) const;

    /// Structural check of the class invariants.
    bool valid() const;

    friend bool operator==(const ConcaveEnvelope&, const ConcaveEnvelope&) = default;

private:
    std::vector<Vertex> vertices_;
};

struct Allocation {
    Rational value;
    std::vector<Rational> budgets;  // y_j per child, sum p_j y_j <= total
};

/// sup { sum p_j V_j(y_j) : sum p_j y_j <= total } by merging segments in
/// decreasing slope order. Errors: BudgetBelowDomain.
Allocation allocate(std::span<const std::pair<Rational, ConcaveEnvelope>> children, const Rational& total);

/// The same supremum as a function of the total budget.
ConcaveEnvelope combine(std::span<const std::pair<Rational, ConcaveEnvelope>> children);

/// Node value-in-budget: the stop point (0, S) mixed with continuation
/// (g_dt + y, f_dt + C(y)), where C is the combined children envelope.
ConcaveEnvelope backstep(const Rational& stop_payoff, const Rational& f_dt, const Rational& g_dt,
                         const ConcaveEnvelope& continuation);

}  // namespace cstop
