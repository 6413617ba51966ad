#include "doctest.h"
#include "support.hpp"

#include "cstop/error.hpp"
#include "cstop/harness.hpp"
#include "cstop/lp_oracle.hpp"
#include "cstop/simplex.hpp"
#include "cstop/stopping_rules.hpp"

using namespace cstop;
using cstop::testing::budgets;
using cstop::testing::Q;

namespace {

TreeInstance rw2_tau() { return build_instance(cstop::testing::with_ineq(cstop::testing::rw2_spec(), "1")); }

}  // namespace

TEST_CASE("simplex: textbook maximum with duals") {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36, duals (0, 3/2, 1)
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {3, 5};
    lp.rows.push_back({{{0, 1}}, LinearProgram::Sense::LessEqual, 4, "a"});
    lp.rows.push_back({{{1, 2}}, LinearProgram::Sense::LessEqual, 12, "b"});
    lp.rows.push_back({{{0, 3}, {1, 2}}, LinearProgram::Sense::LessEqual, 18, "c"});
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == 36);
    CHECK(s.x[0] == 2);
    CHECK(s.x[1] == 6);
    CHECK(s.duals[0] == 0);
    CHECK(s.duals[1] == Q("3/2"));
    CHECK(s.duals[2] == 1);
}

TEST_CASE("simplex: infeasible system yields a Farkas certificate") {
    // x + y = 1, x + y <= 1/2
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1, 0};
    lp.rows.push_back({{{0, 1}, {1, 1}}, LinearProgram::Sense::Equal, 1, "eq"});
    lp.rows.push_back({{{0, 1}, {1, 1}}, LinearProgram::Sense::LessEqual, Q("1/2"), "le"});
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Infeasible);
    // y^T A >= 0 componentwise, y^T b < 0, y >= 0 on the <= row
    Rational a0 = s.farkas[0] + s.farkas[1];
    Rational yb = s.farkas[0] * 1 + s.farkas[1] * Q("1/2");
    CHECK(a0 >= 0);
    CHECK(yb < 0);
    CHECK(s.farkas[1] >= 0);
}

TEST_CASE("simplex: negative right-hand sides and unboundedness") {
    LinearProgram lp;
    lp.num_vars = 1;
    lp.objective = {1};
    lp.rows.push_back({{{0, -1}}, LinearProgram::Sense::LessEqual, -2, "x>=2"});
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
    lp.objective = {-1};
    LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x[0] == 2);
}

TEST_CASE("RW2 unconstrained: value 2, stop at depth 2") {
    TreeInstance t = cstop::testing::rw2();
    SolveResult r = solve_weak(t, t.declared_budgets());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value == ExtendedReal(2));
    for (NodeId leaf : t.leaves()) CHECK(r.measure.stop[leaf] == Q("1/4"));
    // oracle: best pure rule
    Rational best = -1000;
    for (const auto& p : cstop::testing::pure_rules(t)) best = std::max(best, Rational(p.value.finite()));
    CHECK(r.value == ExtendedReal(best));
    CHECK(cstop::testing::pure_rules(t).size() == 5);
}

TEST_CASE("RW2 with E[tau] <= y: V(y) = min(y, 2)") {
    TreeInstance t = rw2_tau();
    const auto rules = cstop::testing::pure_rules(t);
    std::vector<Rational> a;
    for (const auto& p : rules) a.push_back(p.g[0]);
    for (int k = 0; k <= 12; ++k) {
        Rational y = ratio(k, 4);
        SolveResult r = solve_weak(t, budgets({y}));
        REQUIRE(r.status == SolveStatus::Optimal);
        Rational expect = y < 2 ? y : Rational(2);
        CHECK(r.value == ExtendedReal(expect));
        CHECK(r.value == ExtendedReal(*cstop::testing::best_mixture(rules, a, y, false)));
        CHECK(measure_value(t, r.measure) == r.value);
        CHECK(audit_measure(t, r.measure, budgets({y})).feasible);
    }
}

TEST_CASE("RW2 equality targets") {
    InstanceSpec s = cstop::testing::with_eq(cstop::testing::rw2_spec(), "1");
    TreeInstance t = build_instance(s);
    SolveResult r = solve_weak(t, budgets({}, {Q("3/2")}));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.value == ExtendedReal(Q("3/2")));

    SolveResult bad = solve_weak(t, budgets({}, {Q("3")}));
    CHECK(bad.status == SolveStatus::Infeasible);
    CHECK(bad.reason == "phase-one");
    CHECK(!bad.certificate.empty());

    SolveResult inf = solve_weak(t, budgets({}, {ExtendedReal::pos_inf()}));
    CHECK(inf.status == SolveStatus::Infeasible);
    CHECK(inf.reason == "infinite-equality-target");
}

TEST_CASE("budget dimension mismatch") {
    TreeInstance t = rw2_tau();
    try {
        solve_weak(t, budgets({}));
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("measure_to_rule round-trips on the support") {
    TreeInstance t = rw2_tau();
    SolveResult r = solve_weak(t, budgets({Q("1")}));
    REQUIRE(r.status == SolveStatus::Optimal);
    RandomizedStoppingRule rule = measure_to_rule(t, r.measure);
    CHECK(rule_to_measure(t, rule) == r.measure);

    StoppingMeasure root_stop;
    root_stop.stop.assign(t.size(), Rational(0));
    root_stop.cont.assign(t.size(), Rational(0));
    root_stop.stop[0] = 1;
    RandomizedStoppingRule q = measure_to_rule(t, root_stop);
    CHECK(q.q[0] == 1);
    for (NodeId id = 1; id < t.size(); ++id) CHECK(q.q[id] == 1);  // unreached
    CHECK(rule_to_measure(t, q) == root_stop);
}

TEST_CASE("robust family") {
    TreeInstance a = cstop::testing::rw2();
    TreeInstance b = build_instance(cstop::testing::rw2_spec("2"));
    std::vector<TreeInstance> fam{a};
    RobustResult one = solve_robust(fam, a.declared_budgets());
    CHECK(one.best.value == solve_weak(a, a.declared_budgets()).value);
    CHECK(*one.argmax == 0);

    fam.push_back(b);
    RobustResult two = solve_robust(fam, a.declared_budgets());
    CHECK(two.best.value == ExtendedReal(8));
    CHECK(*two.argmax == 1);

    // a member that is infeasible is skipped
    InstanceSpec eq = cstop::testing::with_eq(cstop::testing::rw2_spec(), "x^2");
    InstanceSpec eq_wide = cstop::testing::with_eq(cstop::testing::rw2_spec("2"), "x^2");
    std::vector<TreeInstance> mixed{build_instance(eq), build_instance(eq_wide)};
    // E[int x^2] = 4 is reachable only with sigma = 2
    RobustResult m = solve_robust(mixed, budgets({}, {Q("4")}));
    CHECK(m.members[0].status == SolveStatus::Infeasible);
    REQUIRE(m.argmax);
    CHECK(*m.argmax == 1);

    std::vector<TreeInstance> none;
    CHECK_THROWS_AS(solve_robust(none, a.declared_budgets()), Error);
}

TEST_CASE("vacuous constraints change nothing") {
    InstanceSpec base = cstop::testing::rw2_spec();
    base.depth = 3;
    base.f = "x/4";
    TreeInstance plain = build_instance(base);
    InstanceSpec s = cstop::testing::with_ineq(base, "1 + x^2");
    s = cstop::testing::with_eq(s, "zero", 0);
    TreeInstance vac = build_instance(s);
    SolveResult a = solve_weak(plain, plain.declared_budgets());
    SolveResult b = solve_weak(vac, budgets({ExtendedReal::pos_inf()}, {0}));
    CHECK(a.value == b.value);
    CHECK(b.active_rows == 0);
}

TEST_CASE("infinite rewards follow the integration convention") {
    InstanceSpec s = cstop::testing::rw2_spec();
    s.pi = "zero";
    s.f = "max(x, 0)*inf";  // +inf once the walk is positive
    TreeInstance t = build_instance(s);
    CHECK(solve_weak(t, t.declared_budgets()).value.is_pos_inf());

    InstanceSpec n = cstop::testing::with_eq(cstop::testing::rw2_spec(), "1");
    n.f = "min(x, 0)*inf";  // -inf once the walk is negative
    TreeInstance tn = build_instance(n);
    // stopping at the root avoids the -inf region
    CHECK(solve_weak(tn, budgets({}, {0})).value == ExtendedReal(0));
    // E[tau] = 2 forces every path to depth 2, including the negative ones
    CHECK(solve_weak(tn, budgets({}, {2})).value.is_neg_inf());
}

TEST_CASE("non-finite constraint accrual is rejected") {
    InstanceSpec s = cstop::testing::with_ineq(cstop::testing::rw2_spec(), "max(x, 0)*inf", Q("1"));
    TreeInstance t = build_instance(s);
    try {
        solve_weak(t, t.declared_budgets());
        FAIL("expected NonFiniteConstraintAccrual");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteConstraintAccrual);
    }
    // the same row is harmless when vacuous
    CHECK(solve_weak(t, budgets({ExtendedReal::pos_inf()})).status == SolveStatus::Optimal);
}

TEST_CASE("property: LP equals the pure-rule mixture oracles on random instances") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        GenShape shape;
        shape.depth = 1 + static_cast<int>(seed % 3);
        shape.branches = 2 + static_cast<int>(seed % 2);
        shape.ineq = seed % 4 == 0 ? 0 : 1;
        shape.eq = seed % 4 == 0 ? 1 : 0;
        shape.path_dependent = seed % 5 == 0;
        TreeInstance t = build_instance(generate_instance(seed, shape));
        BudgetVector b = t.declared_budgets();
        SolveResult r = solve_weak(t, b);
        REQUIRE(r.status == SolveStatus::Optimal);
        const auto rules = cstop::testing::pure_rules(t);
        std::vector<Rational> a;
        std::optional<Rational> bound;
        bool equality = shape.eq == 1;
        for (const auto& p : rules) a.push_back(equality ? p.h[0] : p.g[0]);
        if (equality) {
            bound = b.z[0].finite();
        } else if (!b.y[0].is_pos_inf()) {
            bound = b.y[0].finite();
        }
        auto best = cstop::testing::best_mixture(rules, a, bound, equality);
        REQUIRE(best);
        CHECK(r.value == ExtendedReal(*best));
        Rational mix;
        REQUIRE(cstop::testing::mixture_lp(t, b, mix) == SolveStatus::Optimal);
        CHECK(r.value == ExtendedReal(mix));
    }
}

TEST_CASE("property: multi-constraint LP equals the mixture LP") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        GenShape shape;
        shape.depth = 2 + static_cast<int>(seed % 2);
        shape.branches = 2;
        shape.ineq = 2;
        shape.eq = 1;
        TreeInstance t = build_instance(generate_instance(seed, shape));
        SolveResult r = solve_weak(t, t.declared_budgets());
        REQUIRE(r.status == SolveStatus::Optimal);
        Rational mix;
        REQUIRE(cstop::testing::mixture_lp(t, t.declared_budgets(), mix) == SolveStatus::Optimal);
        CHECK(r.value == ExtendedReal(mix));
        CHECK(audit_measure(t, r.measure, t.declared_budgets()).feasible);
    }
}

TEST_CASE("property: monotone and concave in the budgets; vertex support") {
    for (std::uint64_t seed = 200; seed < 215; ++seed) {
        GenShape shape;
        shape.depth = 3;
        shape.branches = 2 + static_cast<int>(seed % 2);
        shape.ineq = 1;
        shape.eq = 1;
        TreeInstance t = build_instance(generate_instance(seed, shape));
        BudgetVector b = t.declared_budgets();
        if (b.y[0].is_pos_inf()) b.y[0] = ExtendedReal(Q("5"));
        BudgetVector looser = b;
        looser.y[0] = b.y[0] + ExtendedReal(Q("1/2"));
        SolveResult r0 = solve_weak(t, b);
        SolveResult r1 = solve_weak(t, looser);
        REQUIRE(r0.status == SolveStatus::Optimal);
        REQUIRE(r1.status == SolveStatus::Optimal);
        CHECK(r0.value <= r1.value);

        // midpoint of two feasible budget vectors
        BudgetVector other = b;
        other.y[0] = b.y[0] + ExtendedReal(Q("2"));
        other.z[0] = b.z[0] + ExtendedReal(Q("1/8"));
        SolveResult r2 = solve_weak(t, other);
        if (r2.status == SolveStatus::Optimal) {
            BudgetVector mid = b;
            mid.y[0] = ExtendedReal((b.y[0].finite() + other.y[0].finite()) / 2);
            mid.z[0] = ExtendedReal((b.z[0].finite() + other.z[0].finite()) / 2);
            SolveResult rm = solve_weak(t, mid);
            REQUIRE(rm.status == SolveStatus::Optimal);
            CHECK(rm.value.finite() * 2 >= r0.value.finite() + r2.value.finite());
        }
        CHECK(r0.randomized_nodes <= r0.active_rows);
        CHECK(r1.randomized_nodes <= r1.active_rows);
    }
}

TEST_CASE("reported value equals the measure's expectation") {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        GenShape shape;
        shape.depth = 3;
        shape.branches = 3;
        shape.ineq = 1;
        shape.eq = 1;
        TreeInstance t = build_instance(generate_instance(seed, shape));
        SolveResult r = solve_weak(t, t.declared_budgets());
        REQUIRE(r.status == SolveStatus::Optimal);
        CHECK(measure_violation(t, r.measure).empty());
        CHECK(measure_value(t, r.measure) == r.value);
        Rational total = 0;
        for (const Rational& s : r.measure.stop) total += s;
        CHECK(total == 1);
    }
}
