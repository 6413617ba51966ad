#include "doctest.h"
#include "support.hpp"

#include "cstop/error.hpp"
#include "cstop/harness.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/stopping_rules.hpp"

#include <cmath>
#include <random>

using namespace cstop;
using cstop::testing::by_depth;
using cstop::testing::loglog_slope;
using cstop::testing::Q;
using cstop::testing::random_rule;

namespace {

// Law of the hitting node, by evaluating the threshold at the midpoints of a
// uniform grid fine enough to resolve every breakpoint.
StoppingMeasure threshold_grid(const TreeInstance& t, const ThetaProcess& th, long cells) {
    StoppingMeasure m;
    m.stop.assign(t.size(), Rational(0));
    m.cont.assign(t.size(), Rational(0));
    for (long k = 0; k < cells; ++k) {
        Rational eta = ratio(2 * k + 1, 2 * cells);
        const std::vector<NodeId> hit = derandomize(t, th, eta);
        for (std::size_t i = 0; i < hit.size(); ++i) {
            const NodeId leaf = t.leaves()[i];
            Rational w = t.node(leaf).path_prob / cells;
            m.stop[hit[i]] += w;
            for (int d = 0; d < t.node(hit[i]).depth; ++d) m.cont[t.ancestor_at(leaf, d)] += w;
        }
    }
    return m;
}

TreeInstance depth3_ternary(std::uint64_t seed) {
    GenShape shape;
    shape.depth = 3;
    shape.branches = 3;
    shape.ineq = 1;
    shape.eq = 1;
    return build_instance(generate_instance(seed, shape));
}

}  // namespace

TEST_CASE("theta and hitting times on RW2") {
    TreeInstance t = cstop::testing::rw2();
    RandomizedStoppingRule r = by_depth(t, {0, Q("1/2"), 1});
    ThetaProcess th = theta_of_rule(t, r);
    CHECK(th.theta[0] == 0);
    for (NodeId id : t.nodes_at_depth(1)) CHECK(th.theta[id] == Q("1/2"));
    for (NodeId id : t.leaves()) CHECK(th.theta[id] == 1);

    for (NodeId hit : derandomize(t, th, Q("3/10"))) CHECK(t.node(hit).depth == 1);
    // theta_1 = 1/2 is not strictly above eta = 1/2
    for (NodeId hit : derandomize(t, th, Q("1/2"))) CHECK(t.node(hit).depth == 2);
    for (NodeId hit : derandomize(t, th, Q("0"))) CHECK(t.node(hit).depth == 1);
}

TEST_CASE("rule_to_measure on RW2") {
    TreeInstance t = cstop::testing::rw2();
    StoppingMeasure m = rule_to_measure(t, by_depth(t, {0, Q("1/2"), 1}));
    CHECK(m.stop[0] == 0);
    CHECK(m.cont[0] == 1);
    for (NodeId id : t.nodes_at_depth(1)) {
        CHECK(m.stop[id] == Q("1/4"));
        CHECK(m.cont[id] == Q("1/4"));
    }
    for (NodeId id : t.leaves()) CHECK(m.stop[id] == Q("1/8"));
    // E[X_tau^2] = 1/2 * 1 + 1/2 * (1/2 * 4 + 1/2 * 0)
    CHECK(measure_value(t, m) == ExtendedReal(Q("3/2")));
}

TEST_CASE("rule validation") {
    TreeInstance t = cstop::testing::rw2();
    RandomizedStoppingRule r = by_depth(t, {0, Q("1/2"), Q("1/2")});
    try {
        theta_of_rule(t, r);
        FAIL("expected RuleShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RuleShapeMismatch);
    }
    RandomizedStoppingRule short_rule{{0, 1}};
    CHECK_THROWS_AS(theta_of_rule(t, short_rule), Error);
    RandomizedStoppingRule neg = by_depth(t, {Q("-1/2"), 0, 1});
    CHECK_THROWS_AS(rule_to_measure(t, neg), Error);
}

TEST_CASE("property: threshold law equals the rule's law") {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        TreeInstance t = depth3_ternary(seed);
        RandomizedStoppingRule r = random_rule(t, rng);
        ThetaProcess th = theta_of_rule(t, r);
        StoppingMeasure direct = rule_to_measure(t, r);
        // theta has denominators dividing 4^3, so 128 cells resolve every breakpoint
        CHECK(threshold_grid(t, th, 128) == direct);
        CHECK(integrate_threshold(t, th) == direct);
        EquivalenceReport rep = equivalence_check(t, r);
        CHECK(rep.pass);
        CHECK(rep.audit_rule.value == rep.audit_threshold.value);
        CHECK(rep.audit_rule.ineq_accrual == rep.audit_threshold.ineq_accrual);
        CHECK(rep.audit_rule.eq_accrual == rep.audit_threshold.eq_accrual);
    }
}

TEST_CASE("property: theta along words is non-decreasing and ends at one") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TreeInstance t = depth3_ternary(seed);
        RandomizedStoppingRule r = random_rule(t, rng);
        ThetaProcess th = theta_of_rule(t, r);
        CHECK_NOTHROW(validate_theta(t, th));
        for (NodeId leaf : t.leaves()) {
            // independent product along the word
            Rational survive = 1;
            Rational prev = 0;
            for (int d = 0; d <= t.depth(); ++d) {
                NodeId a = t.ancestor_at(leaf, d);
                survive *= 1 - r.q[a];
                CHECK(th.theta[a] == 1 - survive);
                CHECK(th.theta[a] >= prev);
                prev = th.theta[a];
            }
            CHECK(prev == 1);
        }
    }
}

TEST_CASE("corrupted theta is rejected") {
    TreeInstance t = cstop::testing::rw2();
    RandomizedStoppingRule r = by_depth(t, {0, Q("1/2"), 1});
    ThetaProcess th = theta_of_rule(t, r);

    ThetaProcess down = th;
    down.theta[t.nodes_at_depth(1)[0]] = Q("-1/4");
    ThetaProcess open_end = th;
    open_end.theta[t.leaves()[0]] = Q("3/4");
    ThetaProcess dip = th;
    dip.theta[0] = Q("3/4");
    for (const ThetaProcess* bad : {&down, &open_end, &dip}) {
        try {
            equivalence_check(t, r, *bad);
            FAIL("expected EquivalenceViolation");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EquivalenceViolation);
        }
    }

    // a valid theta belonging to another rule
    ThetaProcess other = theta_of_rule(t, by_depth(t, {0, Q("1/4"), 1}));
    try {
        equivalence_check(t, r, other);
        FAIL("expected EquivalenceViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EquivalenceViolation);
    }
}

TEST_CASE("Monte Carlo agrees with the exact value") {
    TreeInstance t = build_instance(cstop::testing::with_ineq(cstop::testing::rw2_spec(), "1"));
    RandomizedStoppingRule r = by_depth(t, {0, Q("1/2"), 1});
    McResult mc = monte_carlo_value(t, r, 1000000, 42, Execution::Parallel);
    CHECK(mc.paths == 1000000);
    CHECK(std::abs(mc.value.mean - 1.5) <= 3 * mc.value.std_error);
    CHECK(mc.value.std_error < 0.01);
    CHECK(std::abs(mc.ineq[0].mean - 1.5) <= 3 * mc.ineq[0].std_error);
    CHECK(std::abs(mc.stop_depth.mean - 1.5) <= 3 * mc.stop_depth.std_error);
}

TEST_CASE("Monte Carlo: a constant payoff has zero variance") {
    InstanceSpec s = cstop::testing::rw2_spec();
    s.pi = "3";
    TreeInstance t = build_instance(s);
    McResult mc = monte_carlo_value(t, by_depth(t, {0, Q("1/3"), 1}), 10000, 7);
    CHECK(mc.value.mean == 3.0);
    CHECK(mc.value.std_error == 0.0);
}

TEST_CASE("Monte Carlo: serial and parallel are bit-identical") {
    TreeInstance t = depth3_ternary(3);
    std::mt19937_64 rng(1);
    RandomizedStoppingRule r = random_rule(t, rng);
    for (std::size_t n : {std::size_t{1}, std::size_t{4095}, std::size_t{4097}, std::size_t{50000}}) {
        McResult a = monte_carlo_value(t, r, n, 99, Execution::Serial);
        McResult b = monte_carlo_value(t, r, n, 99, Execution::Parallel);
        CHECK(a.value.mean == b.value.mean);
        CHECK(a.value.std_error == b.value.std_error);
        CHECK(a.ineq[0].mean == b.ineq[0].mean);
        CHECK(a.eq[0].mean == b.eq[0].mean);
        CHECK(a.stop_depth.mean == b.stop_depth.mean);
    }
    McResult c = monte_carlo_value(t, r, 50000, 100);
    CHECK(c.value.mean != monte_carlo_value(t, r, 50000, 99).value.mean);
}

TEST_CASE("Monte Carlo: standard error shrinks like 1/sqrt(n)") {
    TreeInstance t = cstop::testing::rw2();
    RandomizedStoppingRule r = by_depth(t, {0, Q("1/2"), 1});
    std::vector<double> lx, ly;
    for (std::size_t n : {std::size_t{4000}, std::size_t{16000}, std::size_t{64000}, std::size_t{256000}}) {
        McResult mc = monte_carlo_value(t, r, n, 5, Execution::Parallel);
        REQUIRE(mc.value.std_error > 0);
        lx.push_back(static_cast<double>(n));
        ly.push_back(mc.value.std_error);
    }
    CHECK(loglog_slope(lx, ly) == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("Monte Carlo on random instances stays within 4 standard errors") {
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        TreeInstance t = depth3_ternary(seed);
        RandomizedStoppingRule r = random_rule(t, rng);
        const double exact = to_double(measure_value(t, rule_to_measure(t, r)).finite());
        McResult mc = monte_carlo_value(t, r, 200000, seed, Execution::Parallel);
        CHECK(std::abs(mc.value.mean - exact) <= 4 * mc.value.std_error + 1e-12);
    }
}
