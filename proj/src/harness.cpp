#include "cstop/harness.hpp"

#include "cstop/dpp_verifier.hpp"
#include "cstop/error.hpp"
#include "cstop/lp_oracle.hpp"
#include "cstop/martingale.hpp"
#include "cstop/stopping_rules.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <random>
#include <sstream>

namespace cstop {

namespace {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}

    long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng_); }
    /// Uniform on the grid {lo, lo + 1/den, ..., hi}.
    Rational grid(long lo_num, long hi_num, long den) { return ratio(integer(lo_num, hi_num), den); }
    bool chance(int one_in) { return integer(0, one_in - 1) == 0; }
    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

std::string lit(const Rational& q) { return "(" + to_string(q) + ")"; }

}  // namespace

InstanceSpec generate_instance(std::uint64_t seed, const GenShape& shape) {
    if (shape.depth > shape.depth_cap) {
        throw Error(ErrorCode::ShapeTooLarge, "depth " + std::to_string(shape.depth) + " exceeds the cap " +
                                                  std::to_string(shape.depth_cap));
    }
    if (shape.branches > 9) throw Error(ErrorCode::ShapeTooLarge, "at most 9 branches");
    if (shape.depth < 0 || shape.branches < 1 || shape.ineq < 0 || shape.eq < 0) {
        throw Error(ErrorCode::InvalidInstance, "shape parameters must be non-negative with at least one branch");
    }
    Draw draw(seed);
    InstanceSpec s;
    s.t0 = 0;
    s.dt = draw.chance(2) ? Rational(1) : ratio(1, 2);
    s.depth = shape.depth;

    std::vector<long> weights;
    long total = 0;
    for (int b = 0; b < shape.branches; ++b) {
        weights.push_back(draw.integer(1, 4));
        total += weights.back();
    }
    std::vector<long> incs;
    if (shape.branches <= 5) {
        incs = {-2, -1, 0, 1, 2};
        std::shuffle(incs.begin(), incs.end(), draw.rng());
        incs.resize(static_cast<std::size_t>(shape.branches));
        std::sort(incs.begin(), incs.end(), std::greater<>());
    } else {
        for (int b = 0; b < shape.branches; ++b) incs.push_back(shape.branches - 1 - 2 * b);
    }
    std::vector<InstanceSpec::BranchSpec> law;
    for (int b = 0; b < shape.branches; ++b) {
        law.push_back({ratio(weights[static_cast<std::size_t>(b)], total), {Rational(incs[static_cast<std::size_t>(b)])}});
    }
    s.branching.push_back(std::move(law));
    s.x0_history = {{draw.grid(-2, 2, 2)}};

    const Rational mu = draw.grid(-2, 2, 4);
    s.drift = {shape.path_dependent ? lit(draw.grid(-2, 2, 4)) + "*x_sup" : lit(mu)};
    s.diffusion = {lit(draw.grid(1, 3, 2))};
    s.f = lit(draw.grid(-4, 4, 4)) + "*" + (shape.path_dependent ? "x_sup" : "x") + " + " + lit(draw.grid(-4, 4, 4));
    s.pi = lit(draw.grid(-2, 4, 4)) + "*x^2 + " + lit(draw.grid(-4, 4, 4)) + "*x + " + lit(draw.grid(-4, 4, 4));
    for (int i = 0; i < shape.ineq; ++i) {
        InstanceSpec::IneqSpec g;
        if (i % 2 == 0) {
            g.g = lit(draw.grid(0, 4, 2)) + " + " + lit(draw.grid(0, 2, 2)) + "*abs(x)";
        } else {
            g.g = lit(draw.grid(0, 2, 2)) + " + " + lit(draw.grid(0, 2, 4)) + "*x^2";
        }
        s.ineq.push_back(std::move(g));
    }
    for (int i = 0; i < shape.eq; ++i) {
        InstanceSpec::EqSpec h;
        h.h = lit(draw.grid(-4, 4, 4)) + "*x + " + lit(draw.grid(-4, 4, 4));
        s.eq.push_back(std::move(h));
    }

    // budgets from a random rule keep the instance feasible
    TreeInstance tree = build_instance(s);
    RandomizedStoppingRule rule;
    rule.q.assign(tree.size(), Rational(1));
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (!tree.is_leaf(id)) rule.q[id] = draw.grid(0, 4, 4);
    }
    StoppingMeasure m = rule_to_measure(tree, rule);
    BudgetVector open;
    open.y.assign(tree.num_ineq(), ExtendedReal::pos_inf());
    open.z.assign(tree.num_eq(), ExtendedReal(0));
    MeasureAudit a = audit_measure(tree, m, open);
    for (std::size_t i = 0; i < s.ineq.size(); ++i) {
        if (draw.chance(6)) {
            s.ineq[i].y = ExtendedReal::pos_inf();
        } else {
            s.ineq[i].y = a.ineq_accrual[i] + ExtendedReal(draw.grid(0, 4, 4));
        }
    }
    for (std::size_t i = 0; i < s.eq.size(); ++i) s.eq[i].z = a.eq_accrual[i];
    return s;
}

Json ExperimentRecord::to_json() const {
    return {{"command", command},  {"parameters", parameters}, {"instance_hash", instance_hash},
            {"outputs", outputs},  {"wall_ms", wall_ms},       {"seed", seed},
            {"version", version}, {"pass", pass}};
}

SuiteKind parse_suite_kind(const std::string& s) {
    if (s == "equivalence") return SuiteKind::Equivalence;
    if (s == "dpp") return SuiteKind::Dpp;
    if (s == "membership") return SuiteKind::Membership;
    if (s == "all") return SuiteKind::All;
    throw Error(ErrorCode::ParseError, "unknown suite '" + s + "' (equivalence|dpp|membership|all)");
}

std::string to_string(SuiteKind k) {
    switch (k) {
        case SuiteKind::Equivalence: return "equivalence";
        case SuiteKind::Dpp: return "dpp";
        case SuiteKind::Membership: return "membership";
        case SuiteKind::All: return "all";
    }
    return "unknown";
}

std::string SuiteSummary::tsv() const {
    std::ostringstream os;
    os << "instance\thash\tcheck\tpass\tmax_gap\truntime_ms\tdetail\n";
    for (const SuiteRow& r : rows) {
        os << r.instance << '\t' << r.hash << '\t' << r.check << '\t' << (r.pass ? "pass" : "FAIL") << '\t'
           << r.max_gap << '\t' << r.runtime_ms << '\t' << r.detail << '\n';
    }
    os << "# passed\t" << passed << '/' << total << '\n';
    return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

SuiteRow equivalence_row(const TreeInstance& tree, const BudgetVector& budgets) {
    SuiteRow row;
    row.check = "equivalence";
    SolveResult sol = solve_weak(tree, budgets);
    if (sol.status != SolveStatus::Optimal) {
        row.detail = "LP " + to_string(sol.status);
        return row;
    }
    RandomizedStoppingRule rule = measure_to_rule(tree, sol.measure);
    StoppingMeasure back = integrate_threshold(tree, theta_of_rule(tree, rule));
    std::size_t diff = 0;
    for (NodeId id = 0; id < tree.size(); ++id) diff += back.stop[id] != sol.measure.stop[id] ? 1 : 0;
    equivalence_check(tree, rule);
    row.pass = diff == 0;
    row.max_gap = diff == 0 ? "0" : "mismatch";
    row.detail = std::to_string(diff) + " differing nodes";
    return row;
}

SuiteRow dpp_row(const TreeInstance& tree, const BudgetVector& budgets, std::uint64_t seed) {
    SuiteRow row;
    row.check = "dpp";
    SolveResult sol = solve_weak(tree, budgets);
    if (sol.status != SolveStatus::Optimal) {
        row.detail = "LP " + to_string(sol.status);
        return row;
    }
    if (tree.depth() < 1) {
        row.pass = true;
        row.max_gap = "-";
        row.detail = "no intermediate time";
        return row;
    }
    std::vector<Cut> cuts;
    for (int k = 1; k < tree.depth(); ++k) cuts.push_back(cut_at_depth(tree, k));
    cuts.push_back(first_randomization_cut(tree, sol.measure));
    Rational worst = 0;
    bool all = true;
    DppOptions opt;
    opt.seed = seed;
    for (const Cut& c : cuts) {
        DppReport r = verify_dpp(tree, budgets, c, opt);
        all = all && r.pass;
        if (r.gap > worst) worst = r.gap;
    }
    row.pass = all;
    row.max_gap = to_string(worst);
    row.detail = std::to_string(cuts.size()) + " cuts";
    return row;
}

SuiteRow membership_row(const TreeInstance& tree, const BudgetVector& budgets) {
    SuiteRow row;
    row.check = "membership";
    SolveResult sol = solve_weak(tree, budgets);
    if (sol.status != SolveStatus::Optimal) {
        row.detail = "LP " + to_string(sol.status);
        return row;
    }
    MembershipReport r = check_membership(tree, candidate_from_measure(tree, sol.measure));
    row.pass = r.pass;
    row.max_gap = to_string(r.max_abs);
    row.detail = std::to_string(r.tests) + " tests";
    return row;
}

}  // namespace

std::vector<SuiteRow> run_checks(const std::string& name, const InstanceSpec& spec, SuiteKind kind, std::uint64_t seed) {
    const std::string hash = hash_hex(instance_hash(spec));
    std::vector<SuiteKind> kinds;
    if (kind == SuiteKind::All) {
        kinds = {SuiteKind::Equivalence, SuiteKind::Dpp, SuiteKind::Membership};
    } else {
        kinds = {kind};
    }
    std::vector<SuiteRow> rows;
    std::optional<TreeInstance> tree;
    std::string build_error;
    try {
        tree.emplace(build_instance(spec));
    } catch (const std::exception& e) {
        build_error = e.what();
    }
    for (SuiteKind k : kinds) {
        const auto t0 = Clock::now();
        SuiteRow row;
        if (!tree) {
            row.check = to_string(k);
            row.detail = build_error;
        } else {
            const BudgetVector budgets = tree->declared_budgets();
            try {
                switch (k) {
                    case SuiteKind::Equivalence: row = equivalence_row(*tree, budgets); break;
                    case SuiteKind::Dpp: row = dpp_row(*tree, budgets, seed); break;
                    default: row = membership_row(*tree, budgets); break;
                }
            } catch (const std::exception& e) {
                row.check = to_string(k);
                row.pass = false;
                row.detail = e.what();
            }
        }
        if (row.max_gap.empty()) row.max_gap = "-";
        row.instance = name;
        row.hash = hash;
        row.runtime_ms = ms_since(t0);
        rows.push_back(std::move(row));
    }
    return rows;
}

SuiteSummary run_suite(const std::filesystem::path& dir, SuiteKind kind, const std::filesystem::path& out_dir,
                       std::uint64_t seed, Execution exec) {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    if (std::filesystem::is_directory(dir, ec)) {
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            const bool record = name.size() > 12 && name.ends_with(".record.json");
            if (e.is_regular_file() && e.path().extension() == ".json" && !record) files.push_back(e.path());
        }
    }
    if (files.empty()) throw Error(ErrorCode::NoInstances, "no *.json instances in " + dir.string());
    std::sort(files.begin(), files.end());
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());

    std::vector<std::vector<SuiteRow>> per(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    auto one = [&](std::size_t i) {
        try {
            const auto t0 = Clock::now();
            const std::string name = files[i].filename().string();
            InstanceSpec spec;
            try {
                spec = parse_instance(read_json(files[i]));
            } catch (const std::exception& e) {
                SuiteRow row;
                row.instance = name;
                row.check = to_string(kind);
                row.max_gap = "-";
                row.detail = e.what();
                per[i] = {row};
                return;
            }
            per[i] = run_checks(name, spec, kind, seed);
            ExperimentRecord rec;
            rec.command = "suite " + to_string(kind);
            rec.parameters = {{"instance", name}};
            rec.instance_hash = hash_hex(instance_hash(spec));
            rec.seed = seed;
            Json rows = Json::array();
            for (const SuiteRow& r : per[i]) {
                rows.push_back({{"check", r.check}, {"pass", r.pass}, {"max_gap", r.max_gap}, {"detail", r.detail}});
                rec.pass = rec.pass && r.pass;
            }
            rec.outputs = {{"rows", rows}};
            rec.wall_ms = ms_since(t0);
            write_json_atomic(out_dir / (files[i].stem().string() + ".record.json"), rec.to_json());
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto n = static_cast<std::ptrdiff_t>(files.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < files.size(); ++i) one(i);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SuiteSummary sum;
    for (auto& rows : per) {
        for (auto& r : rows) {
            ++sum.total;
            if (r.pass) ++sum.passed;
            sum.rows.push_back(std::move(r));
        }
    }
    write_text_atomic(out_dir / "suite.tsv", sum.tsv());
    return sum;
}

}  // namespace cstop
