#pragma once

#include "cstop/measure.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/rational.hpp"
#include "cstop/tree.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cstop {

/// Polynomial in (w, x) with rational coefficients; variables 0..d-1 are w,
/// d..d+l-1 are x.
class Polynomial {
public:
    struct Term {
        std::vector<int> exponent;
        Rational coef;
    };

    explicit Polynomial(std::size_t vars = 0) : vars_(vars) {}
    static Polynomial monomial(std::vector<int> exponent);

    std::size_t vars() const { return vars_; }
    int degree() const;
    const std::vector<Term>& terms() const { return terms_; }
    void add_term(std::vector<int> exponent, const Rational& coef);

    Rational evaluate(std::span<const Rational> point) const;
    Polynomial derivative(std::size_t var) const;
    std::string to_string() const;  // e.g. "w0^2*x0"

private:
    std::size_t vars_;
    std::vector<Term> terms_;
};

/// All monomials of total degree 1..degree. Errors: DegreeTooHigh (degree > 4).
std::vector<Polynomial> test_functions(std::size_t vars, int degree);

/// Joint law of (increment path, stopping depth) as seen by the membership
/// test, with the observed Brownian and state values at each node.
struct Candidate {
    /// mass[i][k]: leaf tree.leaves()[i] with stop depth k = 0..N.
    std::vector<std::vector<Rational>> mass;
    /// Mass on leaf i stopped before the start time.
    std::vector<Rational> pre_start;
    std::vector<State> brownian;  // per node
    std::vector<State> state;     // per node
    Path history;                 // observed path on [0, t0]
};

Candidate candidate_from_measure(const TreeInstance& tree, const StoppingMeasure& m);

/// Law induced by `rule` when the increments follow `branch_probs` instead of
/// the tree's branching; branch_probs[v][j] is the probability of child j of
/// non-leaf node v. An empty override means the tree's own law.
Candidate candidate_from_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule,
                              const std::vector<std::vector<Rational>>& branch_probs = {});

enum class CompensatorMode { ExactDiscrete, Generator };

/// M_k(phi) at every node, along the candidate's observed values.
std::vector<Rational> compensated_process(const TreeInstance& tree, const Candidate& c, const Polynomial& phi,
                                          CompensatorMode mode);
/// Same, along the tree's own values.
std::vector<Rational> compensated_process(const TreeInstance& tree, const Polynomial& phi, CompensatorMode mode);

struct MembershipOptions {
    int degree = 2;
    CompensatorMode mode = CompensatorMode::ExactDiscrete;
    double tolerance = 0;          // generator mode: |stat| <= tolerance * dt
    std::size_t weight_cap = 256;  // cylinder weights per left time s
    std::size_t keep_failures = 16;
    Execution exec = Execution::Serial;
};

struct MembershipStat {
    std::string phi;
    int s = 0;
    int r = 0;
    std::string weight;
    Rational value;
};

struct MembershipReport {
    std::size_t tests = 0;
    Rational threshold;  // 0 in exact mode
    Rational max_abs;     // largest |statistic|
    MembershipStat worst;
    std::size_t failures = 0;
    std::vector<MembershipStat> failing;  // first keep_failures
    bool clause1 = false;
    bool clause2 = false;
    std::string clause2_reason;
    bool pass = false;
};

/// Errors: DegreeTooHigh, ShapeMismatch (candidate does not fit the tree).
MembershipReport check_membership(const TreeInstance& tree, const Candidate& c, const MembershipOptions& options = {});

}  // namespace cstop
