// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include "cstop/budget_dp.hpp"
#include "cstop/dpp_verifier.hpp"
#include "cstop/error.hpp"
#include "cstop/harness.hpp"
#include "cstop/lp_oracle.hpp"
#include "cstop/martingale.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/stopping_rules.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace cstop;
using cstop::testing::budgets;
using cstop::testing::Q;

namespace {

constexpr int kInstances = 50;
constexpr double kEquivalenceSeconds = 10;
constexpr double kDppSeconds = 60;
constexpr int kDpInstances = 30;
constexpr int kDpBudgets = 11;
constexpr double kDpSeconds = 30;
constexpr int kPerturbations = 100;
constexpr double kMinGeneratorSlope = 0.9;
constexpr std::size_t kMcPaths = 1000000;
constexpr std::uint64_t kMcSeed = 20240601;
constexpr double kMcSigmas = 3;
constexpr double kMaxMcStdError = 0.01;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Depth <= 3, <= 3 branches, rational data, mixed constraint shapes.
std::vector<InstanceSpec> shared_instances() {
    std::vector<InstanceSpec> out;
    for (int i = 0; i < kInstances; ++i) {
        const auto seed = static_cast<std::uint64_t>(i + 1);
        GenShape shape;
        shape.depth = 1 + i % 3;
        shape.branches = 2 + (i / 3) % 2;
        shape.ineq = i % 5 == 4 ? 2 : 1;
        shape.eq = i % 4 == 3 ? 1 : 0;
        shape.path_dependent = i % 6 == 5;
        out.push_back(generate_instance(seed, shape));
    }
    return out;
}

Outcome equivalence(const std::vector<TreeInstance>& trees) {
    const auto start = Clock::now();
    int exact = 0;
    std::string first_bad;
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const TreeInstance& t = trees[i];
        try {
            SolveResult r = solve_weak(t, t.declared_budgets());
            RandomizedStoppingRule rule = measure_to_rule(t, r.measure);
            StoppingMeasure back = integrate_threshold(t, theta_of_rule(t, rule));
            if (r.status == SolveStatus::Optimal && back == r.measure && equivalence_check(t, rule).pass) {
                ++exact;
            } else if (first_bad.empty()) {
                first_bad = "instance " + std::to_string(i + 1);
            }
        } catch (const Error& e) {
            if (first_bad.empty()) first_bad = "instance " + std::to_string(i + 1) + ": " + e.what();
        }
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = exact == static_cast<int>(trees.size()) && secs < kEquivalenceSeconds;
    o.detail = fmt("%d/%zu stop-mass vectors reproduced exactly, %.2f s (limit %.0f s)", exact, trees.size(), secs,
                   kEquivalenceSeconds);
    if (!first_bad.empty()) o.detail += "; first failure: " + first_bad;
    return o;
}

Outcome dpp(const std::vector<TreeInstance>& trees) {
    const auto start = Clock::now();
    int checks = 0, exact = 0, infeasible = 0;
    std::string first_bad;
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const TreeInstance& t = trees[i];
        for (int k = 1; k < t.depth(); ++k) {
            ++checks;
            try {
                DppReport rep = verify_dpp(t, t.declared_budgets(), cut_at_depth(t, k));
                if (rep.pass && sgn(rep.gap) == 0) {
                    ++exact;
                } else if (first_bad.empty()) {
                    first_bad = fmt("instance %zu depth %d gap %s", i + 1, k, to_string(rep.gap).c_str());
                }
            } catch (const Error& e) {
                if (e.code() == ErrorCode::SubproblemInfeasible) ++infeasible;
                if (first_bad.empty()) first_bad = fmt("instance %zu depth %d: %s", i + 1, k, e.what());
            }
        }
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = checks > 0 && exact == checks && infeasible == 0 && secs < kDppSeconds;
    o.detail = fmt("%d/%d intermediate depths with gap 0, %d SubproblemInfeasible, %.2f s (limit %.0f s)", exact, checks,
                   infeasible, secs, kDppSeconds);
    if (!first_bad.empty()) o.detail += "; first failure: " + first_bad;
    return o;
}

Outcome dp_vs_lp() {
    const auto start = Clock::now();
    int checks = 0, exact = 0;
    std::string first_bad;
    for (int i = 0; i < kDpInstances; ++i) {
        GenShape shape;
        shape.depth = 1 + i % 3;
        shape.branches = 2 + (i / 3) % 2;
        shape.ineq = 1;
        shape.path_dependent = i % 4 == 3;
        TreeInstance t = build_instance(generate_instance(static_cast<std::uint64_t>(1000 + i), shape));
        DpTable table = dp_solve(t);
        const ConcaveEnvelope& root = table.value[t.root()];
        const Rational lo = root.domain_start();
        const Rational hi = root.vertices().back().x + 1;
        for (int k = 0; k < kDpBudgets; ++k) {
            ++checks;
            const Rational y = lo + (hi - lo) * ratio(k, kDpBudgets - 1);
            SolveResult lp = solve_weak(t, budgets({y}));
            if (lp.status == SolveStatus::Optimal && lp.value == ExtendedReal(root.value(y))) {
                ++exact;
            } else if (first_bad.empty()) {
                first_bad = fmt("instance %d budget %s", i + 1, to_string(y).c_str());
            }
        }
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = exact == checks && secs < kDpSeconds;
    o.detail = fmt("%d/%d budgets with |dp - lp| = 0, %.2f s (limit %.0f s)", exact, checks, secs, kDpSeconds);
    if (!first_bad.empty()) o.detail += "; first failure: " + first_bad;
    return o;
}

Outcome taxonomy() {
    int checks = 0, exact = 0;
    for (int i = 0; i < 10; ++i) {
        GenShape shape;
        shape.depth = 1 + i % 3;
        shape.branches = 2 + i % 2;
        shape.ineq = 0;
        InstanceSpec plain = generate_instance(static_cast<std::uint64_t>(2000 + i), shape);
        TreeInstance tp = build_instance(plain);
        const ExtendedReal free = solve_weak(tp, tp.declared_budgets()).value;

        InstanceSpec vac = cstop::testing::with_ineq(plain, "1 + x^2", ExtendedReal::pos_inf());
        vac = cstop::testing::with_eq(vac, "zero", 0);
        TreeInstance tv = build_instance(vac);
        ++checks;
        exact += solve_weak(tv, tv.declared_budgets()).value == free ? 1 : 0;

        TreeInstance ti = build_instance(cstop::testing::with_ineq(plain, "1", ExtendedReal::pos_inf()));
        ++checks;
        exact += ExtendedReal(dp_value(ti, ExtendedReal::pos_inf())) == free ? 1 : 0;
    }
    TreeInstance rw = build_instance(cstop::testing::with_ineq(cstop::testing::rw2_spec(), "1"));
    std::string values;
    for (const char* y : {"0", "1/2", "1", "3/2", "2", "3"}) {
        const Rational yy = Q(y);
        const Rational expect = yy < 2 ? yy : Rational(2);
        const ExtendedReal lp = solve_weak(rw, budgets({yy})).value;
        const Rational dp = dp_value(rw, yy);
        checks += 2;
        exact += (lp == ExtendedReal(expect) ? 1 : 0) + (dp == expect ? 1 : 0);
        values += (values.empty() ? "" : ", ") + std::string("V(") + y + ")=" + to_string(dp);
    }
    Outcome o;
    o.pass = exact == checks;
    o.detail = fmt("%d/%d exact; ", exact, checks) + values;
    return o;
}

Outcome membership(const std::vector<TreeInstance>& trees) {
    int sound = 0;
    for (const TreeInstance& t : trees) {
        SolveResult r = solve_weak(t, t.declared_budgets());
        MembershipReport rep = check_membership(t, candidate_from_measure(t, r.measure));
        sound += rep.pass && sgn(rep.max_abs) == 0 ? 1 : 0;
    }

    std::mt19937_64 rng(77);
    int rejected = 0;
    for (int trial = 0; trial < kPerturbations; ++trial) {
        const TreeInstance& t = trees[static_cast<std::size_t>(trial) % trees.size()];
        RandomizedStoppingRule r = cstop::testing::random_rule(t, rng);
        Candidate c = cstop::testing::perturbed_candidate(t, r, trial, rng);
        rejected += check_membership(t, c).pass ? 0 : 1;
    }

    std::vector<double> dts, stats;
    for (int steps : {1, 2, 4, 8}) {
        TreeInstance t = cstop::testing::trinomial(steps);
        RandomizedStoppingRule hold{std::vector<Rational>(t.size(), Rational(0))};
        for (NodeId id : t.leaves()) hold.q[id] = 1;
        MembershipOptions opt;
        opt.degree = 3;
        opt.mode = CompensatorMode::Generator;
        opt.tolerance = 1e6;
        opt.weight_cap = 4;
        opt.exec = Execution::Parallel;
        MembershipReport rep = check_membership(t, candidate_from_rule(t, hold), opt);
        dts.push_back(1.0 / steps);
        stats.push_back(to_double(rep.max_abs));
    }
    const double slope = cstop::testing::loglog_slope(dts, stats);

    Outcome o;
    o.pass = sound == static_cast<int>(trees.size()) && rejected == kPerturbations && slope >= kMinGeneratorSlope;
    o.detail = fmt("%d/%zu solver measures with statistics 0, %d/%d perturbations rejected, generator slope %.3f "
                   "(min %.1f)",
                   sound, trees.size(), rejected, kPerturbations, slope, kMinGeneratorSlope);
    return o;
}

Outcome monte_carlo() {
    TreeInstance t = cstop::testing::rw2();
    McResult mc = monte_carlo_value(t, cstop::testing::by_depth(t, {0, Q("1/2"), 1}), kMcPaths, kMcSeed,
                                    Execution::Parallel);
    const double err = std::abs(mc.value.mean - 1.5);
    Outcome o;
    o.pass = err <= kMcSigmas * mc.value.std_error && mc.value.std_error < kMaxMcStdError;
    o.detail = fmt("mean %.6f, |mean - 1.5| = %.2e, SE %.2e (%.2f SE, limit %.0f; SE limit %.2f)", mc.value.mean, err,
                   mc.value.std_error, err / mc.value.std_error, kMcSigmas, kMaxMcStdError);
    return o;
}

Outcome robust() {
    std::vector<TreeInstance> family{cstop::testing::rw2(), build_instance(cstop::testing::rw2_spec("2"))};
    RobustResult r = solve_robust(family, family[0].declared_budgets());
    Outcome o;
    o.pass = r.best.value == ExtendedReal(8) && r.argmax && *r.argmax == 1;
    o.detail = "value " + to_string(r.best.value.finite()) + ", argmax model " + (r.argmax ? std::to_string(*r.argmax + 1) : "-");
    return o;
}

}  // namespace

int main() {
    std::vector<TreeInstance> trees;
    for (const InstanceSpec& s : shared_instances()) trees.push_back(build_instance(s));

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"strong/weak equivalence", [&] { return equivalence(trees); }},
        {"DPP identity", [&] { return dpp(trees); }},
        {"DP engine vs LP", dp_vs_lp},
        {"constraint taxonomy", taxonomy},
        {"membership tests", [&] { return membership(trees); }},
        {"Monte Carlo consistency", monte_carlo},
        {"robust value", robust},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.detail = std::string("threw: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %zu  %-26s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
