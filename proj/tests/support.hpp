#pragma once

#include "cstop/io.hpp"
#include "cstop/martingale.hpp"
#include "cstop/lp_oracle.hpp"
#include "cstop/measure.hpp"
#include "cstop/simplex.hpp"
#include "cstop/tree.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <optional>
#include <string>
#include <vector>

namespace cstop::testing {

inline Rational Q(const std::string& s) { return parse_rational(s); }

/// Binomial +-1 walk, p = 1/2, dt = 1, N = 2, b = 0, sigma given, f = 0, pi = x^2.
inline InstanceSpec rw2_spec(const std::string& sigma = "1") {
    InstanceSpec s;
    s.dt = 1;
    s.depth = 2;
    s.branching = {{{Q("1/2"), {Q("1")}}, {Q("1/2"), {Q("-1")}}}};
    s.x0_history = {{Q("0")}};
    s.drift = {"zero"};
    s.diffusion = {sigma};
    s.f = "zero";
    s.pi = "x^2";
    return s;
}

inline InstanceSpec with_ineq(InstanceSpec s, const std::string& g, ExtendedReal y = ExtendedReal::pos_inf()) {
    s.ineq.push_back({g, y});
    return s;
}

inline InstanceSpec with_eq(InstanceSpec s, const std::string& h, ExtendedReal z = 0) {
    s.eq.push_back({h, z});
    return s;
}

inline TreeInstance rw2() { return build_instance(rw2_spec()); }

inline BudgetVector budgets(std::vector<ExtendedReal> y, std::vector<ExtendedReal> z = {}) {
    return BudgetVector{std::move(y), std::move(z)};
}

/// One pure stopping rule: value and accruals of the law that stops with
/// certainty at the nodes of a stopping set.
struct PureRule {
    std::vector<NodeId> stops;
    ExtendedReal value;
    std::vector<Rational> g, h;
};

/// Every pure (non-randomized) stopping rule, enumerated recursively:
/// at each node either stop, or continue and combine the children's choices.
inline std::vector<PureRule> pure_rules(const TreeInstance& tree) {
    std::function<std::vector<std::vector<NodeId>>(NodeId)> sets = [&](NodeId v) {
        std::vector<std::vector<NodeId>> out{{v}};
        if (tree.is_leaf(v)) return out;
        std::vector<std::vector<NodeId>> acc{{}};
        for (NodeId c : tree.children(v)) {
            std::vector<std::vector<NodeId>> next;
            for (const auto& a : acc) {
                for (const auto& b : sets(c)) {
                    auto m = a;
                    m.insert(m.end(), b.begin(), b.end());
                    next.push_back(std::move(m));
                }
            }
            acc = std::move(next);
        }
        out.insert(out.end(), acc.begin(), acc.end());
        return out;
    };
    std::vector<PureRule> rules;
    for (auto& s : sets(tree.root())) {
        PureRule r;
        r.value = 0;
        r.g.assign(tree.num_ineq(), Rational(0));
        r.h.assign(tree.num_eq(), Rational(0));
        for (NodeId v : s) {
            const auto& n = tree.node(v);
            r.value += ExtendedReal(n.path_prob) * (n.accrued.F + ExtendedReal(n.terminal));
            for (std::size_t i = 0; i < tree.num_ineq(); ++i) r.g[i] += n.path_prob * n.accrued.G[i].finite();
            for (std::size_t i = 0; i < tree.num_eq(); ++i) r.h[i] += n.path_prob * n.accrued.H[i].finite();
        }
        r.stops = std::move(s);
        rules.push_back(std::move(r));
    }
    return rules;
}

/// Best mixture of pure rules under at most one scalar constraint, by
/// exhaustive search over single rules and pairs. `a` is the accrual of each
/// rule, `bound` the right-hand side, `equality` the constraint sense.
/// Returns nullopt when infeasible.
inline std::optional<Rational> best_mixture(const std::vector<PureRule>& rules, const std::vector<Rational>& a,
                                            const std::optional<Rational>& bound, bool equality) {
    std::optional<Rational> best;
    auto offer = [&](const Rational& v) {
        if (!best || v > *best) best = v;
    };
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const Rational vi = rules[i].value.finite();
        if (!bound || (equality ? a[i] == *bound : a[i] <= *bound)) offer(vi);
        if (!bound) continue;
        for (std::size_t j = 0; j < rules.size(); ++j) {
            // lambda * a_i + (1 - lambda) * a_j = bound with a_i < bound < a_j
            if (!(a[i] < *bound && *bound < a[j])) continue;
            Rational lambda = (a[j] - *bound) / (a[j] - a[i]);
            offer(lambda * vi + (1 - lambda) * rules[j].value.finite());
        }
    }
    return best;
}

/// Independent formulation of the weak problem: an LP over mixture weights
/// of pure rules (Kuhn: every stopping measure is such a mixture).
inline SolveStatus mixture_lp(const TreeInstance& tree, const BudgetVector& b, Rational& value) {
    const auto rules = pure_rules(tree);
    LinearProgram lp;
    lp.num_vars = rules.size();
    for (const auto& r : rules) lp.objective.push_back(r.value.finite());
    LinearProgram::Row sum;
    sum.sense = LinearProgram::Sense::Equal;
    sum.rhs = 1;
    for (std::size_t k = 0; k < rules.size(); ++k) sum.coeffs.emplace_back(k, Rational(1));
    lp.rows.push_back(sum);
    for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
        if (b.y[i].is_pos_inf()) continue;
        LinearProgram::Row row;
        row.sense = LinearProgram::Sense::LessEqual;
        row.rhs = b.y[i].finite();
        for (std::size_t k = 0; k < rules.size(); ++k) row.coeffs.emplace_back(k, rules[k].g[i]);
        lp.rows.push_back(row);
    }
    for (std::size_t i = 0; i < tree.num_eq(); ++i) {
        LinearProgram::Row row;
        row.sense = LinearProgram::Sense::Equal;
        row.rhs = b.z[i].finite();
        for (std::size_t k = 0; k < rules.size(); ++k) row.coeffs.emplace_back(k, rules[k].h[i]);
        lp.rows.push_back(row);
    }
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return SolveStatus::Infeasible;
    value = sol.objective;
    return SolveStatus::Optimal;
}

/// Random rule with q in {0, 1/4, 1/2, 3/4, 1} at non-leaf nodes and q = 1 at leaves.
inline RandomizedStoppingRule random_rule(const TreeInstance& t, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, 4);
    RandomizedStoppingRule r;
    for (NodeId id = 0; id < t.size(); ++id) r.q.push_back(t.is_leaf(id) ? Rational(1) : ratio(pick(rng), 4));
    return r;
}

/// Same q at every node of a depth.
inline RandomizedStoppingRule by_depth(const TreeInstance& t, const std::vector<Rational>& q) {
    RandomizedStoppingRule r;
    for (NodeId id = 0; id < t.size(); ++id) r.q.push_back(q[t.node(id).depth]);
    return r;
}

/// Branch probabilities of every non-leaf node under the tree's own law.
inline std::vector<std::vector<Rational>> own_law(const TreeInstance& t) {
    std::vector<std::vector<Rational>> p(t.size());
    for (NodeId id = 0; id < t.size(); ++id) {
        if (t.is_leaf(id)) continue;
        for (const Branch& b : t.law_at(t.node(id).depth)) p[id].push_back(b.prob);
    }
    return p;
}

/// Brownian increments {+2, 0, -2} with variance dt, unit drift and diffusion, on [0, 1].
inline TreeInstance trinomial(int steps) {
    const Rational dt = ratio(1, steps);
    const Rational side = dt / 8;
    InstanceSpec s = rw2_spec();
    s.dt = dt;
    s.depth = steps;
    s.branching = {{{side, {Q("2")}}, {Rational(1 - 2 * side), {Q("0")}}, {side, {Q("-2")}}}};
    s.drift = {"1"};
    s.diffusion = {"1"};
    return build_instance(s);
}

/// A single corruption of the law induced by `r`; the kind cycles with `trial`:
/// six in ten shift branch mass at one node, three move an observed state,
/// one breaks the initial condition.
inline Candidate perturbed_candidate(const TreeInstance& t, const RandomizedStoppingRule& r, int trial,
                                     std::mt19937_64& rng) {
    const int kind = trial % 10;
    Candidate c;
    if (kind < 6) {
        // shift mass between two branches at one node
        auto probs = own_law(t);
        std::vector<NodeId> inner;
        for (NodeId id = 0; id < t.size(); ++id) {
            if (!t.is_leaf(id)) inner.push_back(id);
        }
        NodeId v = inner[rng() % inner.size()];
        auto& p = probs[v];
        std::size_t a = rng() % p.size();
        std::size_t b = (a + 1 + rng() % (p.size() - 1)) % p.size();
        Rational eps = p[b] / 2;
        p[a] += eps;
        p[b] -= eps;
        c = candidate_from_rule(t, r, probs);
    } else if (kind < 9) {
        // observed state off the Euler recursion at a non-root node
        c = candidate_from_rule(t, r);
        NodeId v = 1 + static_cast<NodeId>(rng() % (t.size() - 1));
        c.state[v][0] += ratio(1, 4);
    } else {
        c = candidate_from_rule(t, r);
        switch (trial / 10 % 3) {
            case 0: c.state[t.root()][0] += 1; break;
            case 1: c.brownian[t.root()][0] = Q("1/2"); break;
            default:
                for (Rational& q : c.mass[0]) {
                    c.pre_start[0] += q;
                    q = 0;
                }
                break;
        }
    }
    return c;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace cstop::testing
