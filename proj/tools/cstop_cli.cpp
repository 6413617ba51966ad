// cstop: command-line front end for the solver and verifiers.
//
//   cstop solve --instance inst.json [--budgets b.json] [--robust dir]
//   cstop dp --instance inst.json --budget 3/2 [--grid 8]
//   cstop derandomize --instance inst.json --rule rule.json --eta 0.3
//   cstop mc --instance inst.json --rule rule.json --paths 1000000 --seed 7
//   cstop verify-dpp --instance inst.json [--budgets b.json] --tau 1|first|rule.json
//   cstop check-class --instance inst.json --measure m.json [--degree 2] [--mode exact|generator] [--tol 1]
//   cstop gen --seed 3 --depth 3 --branches 2 [--count 10] --out dir
//   cstop suite dir all --out results
//
// Exit status is 0 iff every verdict passes, 2 on usage or input errors.

#include "cstop/budget_dp.hpp"
#include "cstop/dpp_verifier.hpp"
#include "cstop/error.hpp"
#include "cstop/harness.hpp"
#include "cstop/io.hpp"
#include "cstop/lp_oracle.hpp"
#include "cstop/martingale.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/stopping_rules.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cstop;

namespace {

using Clock = std::chrono::steady_clock;

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "tsv";
};

// What a command produced: the record, plus the human-readable TSV body.
struct Run {
    ExperimentRecord record;
    std::ostringstream tsv;
};

Json number_json(const Rational& q) { return {{"exact", to_string(q)}, {"decimal", to_double(q)}}; }

Json number_json(const ExtendedReal& x) {
    if (x.is_finite()) return number_json(x.finite());
    return {{"exact", x.is_pos_inf() ? "inf" : "-inf"}, {"decimal", x.is_pos_inf() ? HUGE_VAL : -HUGE_VAL}};
}

std::string text(const ExtendedReal& x) {
    if (!x.is_finite()) return x.is_pos_inf() ? "inf" : "-inf";
    return to_string(x.finite());
}

std::string decimal(const Rational& q) {
    std::ostringstream os;
    os.precision(12);
    os << to_double(q);
    return os.str();
}

struct Loaded {
    InstanceSpec spec;
    TreeInstance tree;
    std::string hash;
};

Loaded load_instance(const std::string& path) {
    InstanceSpec spec = parse_instance(read_json(path));
    TreeInstance tree = build_instance(spec);
    return {spec, std::move(tree), hash_hex(instance_hash(spec))};
}

BudgetVector load_budgets(const std::string& path, const TreeInstance& tree) {
    return path.empty() ? tree.declared_budgets() : parse_budgets(read_json(path));
}

std::string word(const TreeInstance& t, NodeId id) {
    std::string w = word_to_string(t.word_of(id), t.max_branches());
    return w.empty() ? "root" : w;
}

void stop_table(std::ostream& os, const TreeInstance& t, const StoppingMeasure& m) {
    const RandomizedStoppingRule q = measure_to_rule(t, m);
    os << "node\tword\ts\tu\tq\n";
    for (NodeId id = 0; id < t.size(); ++id) {
        if (sgn(m.reach(id)) == 0) continue;
        os << id << '\t' << word(t, id) << '\t' << to_string(m.stop[id]) << '\t' << to_string(m.cont[id]) << '\t'
           << to_string(q.q[id]) << '\n';
    }
}

Json solve_json(const TreeInstance& t, const SolveResult& r) {
    Json j{{"status", to_string(r.status)}, {"value", number_json(r.value)}, {"pivots", r.pivots}};
    if (r.status == SolveStatus::Optimal) {
        j["measure"] = emit_measure(r.measure, t);
        Json yd = Json::array(), zd = Json::array();
        for (const Rational& d : r.ineq_duals) yd.push_back(to_string(d));
        for (const Rational& d : r.eq_duals) zd.push_back(to_string(d));
        j["ineq_duals"] = yd;
        j["eq_duals"] = zd;
        j["randomized_nodes"] = r.randomized_nodes;
        j["active_rows"] = r.active_rows;
    } else {
        j["reason"] = r.reason;
        Json cert = Json::object();
        for (const auto& [label, v] : r.certificate) cert[label] = to_string(v);
        j["certificate"] = cert;
    }
    return j;
}

void describe_solve(std::ostream& os, const TreeInstance& t, const SolveResult& r) {
    os << "status\t" << to_string(r.status) << '\n';
    if (r.status != SolveStatus::Optimal) {
        os << "reason\t" << r.reason << '\n';
        for (const auto& [label, v] : r.certificate) os << "farkas\t" << label << '\t' << to_string(v) << '\n';
        return;
    }
    os << "value\t" << text(r.value) << '\t' << (r.value.is_finite() ? decimal(r.value.finite()) : text(r.value))
       << '\n';
    for (std::size_t i = 0; i < r.ineq_duals.size(); ++i) os << "dual_ineq\t" << i << '\t' << to_string(r.ineq_duals[i]) << '\n';
    for (std::size_t i = 0; i < r.eq_duals.size(); ++i) os << "dual_eq\t" << i << '\t' << to_string(r.eq_duals[i]) << '\n';
    stop_table(os, t, r.measure);
}

void cmd_solve(Run& run, const std::string& inst, const std::string& bfile, const std::string& robust) {
    Loaded L = load_instance(inst);
    const BudgetVector b = load_budgets(bfile, L.tree);
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"budgets", bfile.empty() ? Json("declared") : Json(bfile)},
                             {"budget_values", emit_budgets(b)}};
    if (robust.empty()) {
        SolveResult r = solve_weak(L.tree, b);
        run.record.outputs = solve_json(L.tree, r);
        run.record.pass = r.status == SolveStatus::Optimal;
        describe_solve(run.tsv, L.tree, r);
        return;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(robust)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<TreeInstance> family;
    family.push_back(L.tree);
    for (const auto& f : files) family.push_back(load_instance(f.string()).tree);
    RobustResult r = solve_robust(family, b);
    run.record.parameters["robust"] = robust;
    Json members = Json::array();
    for (std::size_t i = 0; i < r.members.size(); ++i) {
        members.push_back({{"model", i == 0 ? inst : files[i - 1].string()},
                           {"status", to_string(r.members[i].status)},
                           {"value", number_json(r.members[i].value)}});
        run.tsv << "model\t" << i + 1 << '\t' << (i == 0 ? inst : files[i - 1].string()) << '\t'
                << to_string(r.members[i].status) << '\t' << text(r.members[i].value) << '\n';
    }
    run.record.outputs = {{"members", members}};
    run.record.pass = r.argmax.has_value();
    if (r.argmax) {
        run.record.outputs["argmax"] = *r.argmax + 1;
        run.record.outputs["best"] = solve_json(family[*r.argmax], r.best);
        run.tsv << "argmax\t" << *r.argmax + 1 << '\n';
        describe_solve(run.tsv, family[*r.argmax], r.best);
    } else {
        run.tsv << "status\tinfeasible for every model\n";
    }
}

void cmd_dp(Run& run, const std::string& inst, const std::string& budget, int grid) {
    Loaded L = load_instance(inst);
    const ExtendedReal y = parse_extended(budget);
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"budget", budget}, {"grid", grid}};
    DpTable table = dp_solve(L.tree);
    const ConcaveEnvelope& root = table.value[L.tree.root()];
    const Rational v = root.value(y);
    Json env = Json::array();
    run.tsv << "value\t" << to_string(v) << '\t' << decimal(v) << '\n';
    run.tsv << "x\tv\tstop\n";
    for (const auto& p : root.vertices()) {
        env.push_back({{"x", to_string(p.x)}, {"v", to_string(p.v)}, {"stop", p.stop}});
        run.tsv << to_string(p.x) << '\t' << to_string(p.v) << '\t' << (p.stop ? 1 : 0) << '\n';
    }
    run.record.outputs = {{"value", number_json(v)}, {"envelope", env}};
    if (grid > 0) {
        const Rational lo = root.domain_start();
        const Rational hi = root.vertices().back().x == lo ? lo + 1 : root.vertices().back().x;
        Json g = Json::array();
        run.tsv << "grid_y\tgrid_v\n";
        for (int k = 0; k <= grid; ++k) {
            const Rational yk = lo + (hi - lo) * ratio(k, grid);
            const Rational vk = root.value(yk);
            g.push_back({{"y", to_string(yk)}, {"v", to_string(vk)}});
            run.tsv << to_string(yk) << '\t' << to_string(vk) << '\n';
        }
        run.record.outputs["grid"] = g;
    }
    DpPolicy pol = dp_policy(L.tree, table, y);
    run.record.outputs["policy"] = emit_measure(pol.measure, L.tree);
    run.record.pass = true;
}

void cmd_derandomize(Run& run, const std::string& inst, const std::string& rule_file, const std::string& eta_text) {
    Loaded L = load_instance(inst);
    const RandomizedStoppingRule rule = parse_rule(read_json(rule_file), L.tree);
    const Rational eta = parse_rational(eta_text);
    if (eta < 0 || eta >= 1) throw Error(ErrorCode::ParseError, "eta must lie in [0, 1)");
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"rule", rule_file}, {"eta", to_string(eta)}};
    const ThetaProcess theta = theta_of_rule(L.tree, rule);
    const std::vector<NodeId> hits = derandomize(L.tree, theta, eta);
    Json stops = Json::object();
    run.tsv << "leaf\tstop_node\tdepth\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const NodeId leaf = L.tree.leaves()[i];
        stops[word(L.tree, leaf)] = word(L.tree, hits[i]);
        run.tsv << word(L.tree, leaf) << '\t' << word(L.tree, hits[i]) << '\t' << L.tree.node(hits[i]).depth << '\n';
    }
    EquivalenceReport eq = equivalence_check(L.tree, rule, theta);
    run.record.outputs = {{"stops", stops},
                          {"value", number_json(eq.audit_rule.value)},
                          {"equivalence", eq.pass}};
    run.tsv << "value\t" << text(eq.audit_rule.value) << '\n' << "equivalence\t" << (eq.pass ? "pass" : "fail") << '\n';
    run.record.pass = eq.pass;
}

void cmd_mc(Run& run, const std::string& inst, const std::string& rule_file, std::size_t paths, std::uint64_t seed,
            bool serial) {
    Loaded L = load_instance(inst);
    const RandomizedStoppingRule rule = parse_rule(read_json(rule_file), L.tree);
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"rule", rule_file}, {"paths", paths}, {"serial", serial}};
    McResult mc = monte_carlo_value(L.tree, rule, paths, seed, serial ? Execution::Serial : Execution::Parallel);
    const ExtendedReal exact = measure_value(L.tree, rule_to_measure(L.tree, rule));
    auto est = [](const McEstimate& e) { return Json{{"mean", e.mean}, {"std_error", e.std_error}}; };
    Json ineq = Json::array(), eq = Json::array();
    for (const auto& e : mc.ineq) ineq.push_back(est(e));
    for (const auto& e : mc.eq) eq.push_back(est(e));
    run.record.outputs = {{"value", est(mc.value)}, {"exact", number_json(exact)}, {"ineq", ineq},
                          {"eq", eq},               {"stop_depth", est(mc.stop_depth)}};
    run.tsv.precision(10);
    run.tsv << "quantity\tmean\tstd_error\n";
    run.tsv << "value\t" << mc.value.mean << '\t' << mc.value.std_error << '\n';
    for (std::size_t i = 0; i < mc.ineq.size(); ++i) run.tsv << "ineq" << i << '\t' << mc.ineq[i].mean << '\t' << mc.ineq[i].std_error << '\n';
    for (std::size_t i = 0; i < mc.eq.size(); ++i) run.tsv << "eq" << i << '\t' << mc.eq[i].mean << '\t' << mc.eq[i].std_error << '\n';
    run.tsv << "stop_depth\t" << mc.stop_depth.mean << '\t' << mc.stop_depth.std_error << '\n';
    run.tsv << "exact\t" << text(exact) << '\n';
    if (exact.is_finite()) {
        const double z = mc.value.std_error > 0 ? std::abs(mc.value.mean - exact.to_double()) / mc.value.std_error
                                                : (mc.value.mean == exact.to_double() ? 0.0 : HUGE_VAL);
        run.record.outputs["z"] = z;
        run.tsv << "z\t" << z << '\n';
        run.record.pass = z <= 3;
    }
}

Cut cut_from(const TreeInstance& t, const std::string& tau, const BudgetVector& b) {
    if (tau == "first") {
        SolveResult top = solve_weak(t, b);
        if (top.status != SolveStatus::Optimal) throw Error(ErrorCode::InvalidInstance, "instance is infeasible");
        return first_randomization_cut(t, top.measure);
    }
    if (!tau.empty() && tau.find_first_not_of("0123456789") == std::string::npos) return cut_at_depth(t, std::stoi(tau));
    // a pure rule file: the cut is the first node of depth >= 1 with q = 1
    const RandomizedStoppingRule r = parse_rule(read_json(tau), t);
    std::vector<NodeId> nodes;
    for (NodeId leaf : t.leaves()) {
        for (int k = 1; k <= t.depth(); ++k) {
            NodeId a = t.ancestor_at(leaf, k);
            if (r.q[a] != 0 && r.q[a] != 1) throw Error(ErrorCode::RuleShapeMismatch, "tau rule must be pure");
            if (r.q[a] == 1) {
                nodes.push_back(a);
                break;
            }
        }
    }
    return make_cut(t, std::move(nodes));
}

void cmd_verify_dpp(Run& run, const std::string& inst, const std::string& bfile, const std::string& tau,
                    std::uint64_t seed, std::size_t candidates) {
    Loaded L = load_instance(inst);
    const BudgetVector b = load_budgets(bfile, L.tree);
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"budgets", bfile.empty() ? Json("declared") : Json(bfile)},
                             {"tau", tau}, {"candidates", candidates}};
    DppOptions opt;
    opt.seed = seed;
    opt.random_candidates = candidates;
    DppReport rep = verify_dpp(L.tree, b, cut_from(L.tree, tau, b), opt);
    Json nodes = Json::array();
    run.tsv << "lhs\t" << to_string(rep.lhs) << "\nrhs_sub\t" << to_string(rep.rhs_sub) << "\nrhs_super\t"
            << to_string(rep.rhs_super) << "\ngap\t" << to_string(rep.gap) << "\npass\t" << (rep.pass ? "pass" : "fail")
            << "\nword\tmass\tybar\tzbar\tconditional\tsubtree\n";
    for (const DppNodeReport& n : rep.per_node) {
        Json yb = Json::array(), zb = Json::array();
        std::string ys, zs;
        for (const auto& y : n.ybar) {
            yb.push_back(text(y));
            ys += (ys.empty() ? "" : ",") + text(y);
        }
        for (const auto& z : n.zbar) {
            zb.push_back(text(z));
            zs += (zs.empty() ? "" : ",") + text(z);
        }
        nodes.push_back({{"node", n.node}, {"word", n.word}, {"mass", to_string(n.mass)}, {"ybar", yb}, {"zbar", zb},
                         {"conditional_value", to_string(n.conditional_value)}, {"sub_value", to_string(n.sub_value)}});
        run.tsv << n.word << '\t' << to_string(n.mass) << '\t' << (ys.empty() ? "-" : ys) << '\t'
                << (zs.empty() ? "-" : zs) << '\t' << to_string(n.conditional_value) << '\t' << to_string(n.sub_value)
                << '\n';
    }
    run.record.outputs = {{"lhs", to_string(rep.lhs)},
                          {"rhs_sub", to_string(rep.rhs_sub)},
                          {"rhs_super", to_string(rep.rhs_super)},
                          {"gap", to_string(rep.gap)},
                          {"sub_ok", rep.sub_ok},
                          {"super_ok", rep.super_ok},
                          {"candidates", rep.candidates},
                          {"zero_survival", rep.zero_survival},
                          {"per_node", nodes}};
    run.record.pass = rep.pass;
}

void cmd_check_class(Run& run, const std::string& inst, const std::string& mfile, int degree, const std::string& mode,
                     double tol, std::size_t cap) {
    Loaded L = load_instance(inst);
    const StoppingMeasure m = parse_measure(read_json(mfile), L.tree);
    MembershipOptions opt;
    opt.degree = degree;
    opt.mode = mode == "generator" ? CompensatorMode::Generator : CompensatorMode::ExactDiscrete;
    opt.tolerance = tol;
    opt.weight_cap = cap;
    opt.exec = Execution::Parallel;
    run.record.instance_hash = L.hash;
    run.record.parameters = {{"instance", inst}, {"measure", mfile}, {"degree", degree},
                             {"mode", mode},     {"tol", tol},      {"weight_cap", cap}};
    MembershipReport rep = check_membership(L.tree, candidate_from_measure(L.tree, m), opt);
    Json failing = Json::array();
    for (const auto& f : rep.failing) {
        failing.push_back({{"phi", f.phi}, {"s", f.s}, {"r", f.r}, {"weight", f.weight}, {"value", to_string(f.value)}});
    }
    run.record.outputs = {{"tests", rep.tests},
                          {"threshold", to_string(rep.threshold)},
                          {"max_abs", number_json(rep.max_abs)},
                          {"worst", {{"phi", rep.worst.phi}, {"s", rep.worst.s}, {"r", rep.worst.r},
                                     {"weight", rep.worst.weight}, {"value", to_string(rep.worst.value)}}},
                          {"failures", rep.failures},
                          {"failing", failing},
                          {"clause1", rep.clause1},
                          {"clause2", rep.clause2},
                          {"clause2_reason", rep.clause2_reason}};
    run.tsv << "tests\t" << rep.tests << "\nfailures\t" << rep.failures << "\nmax_abs\t" << to_string(rep.max_abs)
            << "\nworst\t" << rep.worst.phi << '\t' << rep.worst.s << '\t' << rep.worst.r << '\t' << rep.worst.weight
            << "\nclause1\t" << (rep.clause1 ? "pass" : "fail") << "\nclause2\t" << (rep.clause2 ? "pass" : "fail")
            << (rep.clause2_reason.empty() ? "" : "\t" + rep.clause2_reason) << '\n';
    run.record.pass = rep.pass;
}

void cmd_gen(Run& run, const Globals& g, const GenShape& shape, int count) {
    run.record.parameters = {{"depth", shape.depth},           {"branches", shape.branches}, {"ineq", shape.ineq},
                             {"eq", shape.eq},                 {"path_dependent", shape.path_dependent},
                             {"depth_cap", shape.depth_cap},   {"count", count}};
    Json made = Json::array();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(i);
        InstanceSpec spec = generate_instance(seed, shape);
        const std::string hash = hash_hex(instance_hash(spec));
        if (g.out.empty()) {
            if (count == 1) {
                run.tsv << emit_instance(spec).dump(2) << '\n';
            } else {
                run.tsv << emit_instance(spec).dump() << '\n';
            }
        } else {
            const fs::path file = fs::path(g.out) / ("gen_" + std::to_string(seed) + ".json");
            write_json_atomic(file, emit_instance(spec));
            run.tsv << file.string() << '\t' << hash << '\n';
        }
        made.push_back({{"seed", seed}, {"hash", hash}});
        if (count == 1) run.record.instance_hash = hash;
    }
    run.record.outputs = {{"instances", made}};
}

void cmd_suite(Run& run, const Globals& g, const std::string& dir, const std::string& kind, bool serial) {
    const fs::path out = g.out.empty() ? fs::path(dir) / "results" : fs::path(g.out);
    fs::create_directories(out);
    run.record.parameters = {{"dir", dir}, {"kind", kind}, {"out", out.string()}};
    SuiteSummary sum = run_suite(dir, parse_suite_kind(kind), out, g.seed, serial ? Execution::Serial : Execution::Parallel);
    run.tsv << sum.tsv();
    Json rows = Json::array();
    for (const SuiteRow& r : sum.rows) {
        rows.push_back({{"instance", r.instance}, {"hash", r.hash}, {"check", r.check}, {"pass", r.pass},
                        {"max_gap", r.max_gap}, {"detail", r.detail}});
    }
    run.record.outputs = {{"passed", sum.passed}, {"total", sum.total}, {"rows", rows}};
    run.record.pass = sum.passed == sum.total;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal stopping with expectation constraints on finite trees"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--out", g.out, "Directory for records and generated files");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"tsv", "json"}))->capture_default_str();

    std::string inst, budgets_file, robust, budget = "inf", rule_file, eta = "0", tau, measure_file, mode = "exact";
    std::string suite_dir, suite_kind = "all";
    int grid = 0, degree = 2, count = 1;
    double tol = 1;
    std::size_t paths = 100000, candidates = 3, cap = 256;
    bool serial = false;
    GenShape shape;

    auto* solve = app.add_subcommand("solve", "Solve the weak problem as an exact LP");
    solve->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    solve->add_option("--budgets", budgets_file, "Budget file (default: declared budgets)")->check(CLI::ExistingFile);
    solve->add_option("--robust", robust, "Directory of further models")->check(CLI::ExistingDirectory);

    auto* dp = app.add_subcommand("dp", "Backward induction in the budget (one inequality)");
    dp->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    dp->add_option("--budget", budget, "Budget y (rational or inf)")->capture_default_str();
    dp->add_option("--grid", grid, "Tabulate V at grid + 1 budgets")->check(CLI::NonNegativeNumber);

    auto* der = app.add_subcommand("derandomize", "Stopping nodes for a fixed threshold");
    der->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    der->add_option("--rule", rule_file)->required()->check(CLI::ExistingFile);
    der->add_option("--eta", eta, "Threshold in [0, 1)")->capture_default_str();

    auto* mc = app.add_subcommand("mc", "Monte Carlo value of a randomized rule");
    mc->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    mc->add_option("--rule", rule_file)->required()->check(CLI::ExistingFile);
    mc->add_option("--paths", paths)->capture_default_str()->check(CLI::PositiveNumber);
    mc->add_flag("--serial", serial, "Single-threaded");

    auto* vd = app.add_subcommand("verify-dpp", "Check the dynamic programming principle at a cut");
    vd->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    vd->add_option("--budgets", budgets_file)->check(CLI::ExistingFile);
    vd->add_option("--tau", tau, "Depth, 'first', or a pure rule file")->required();
    vd->add_option("--candidates", candidates, "Extra feasible vertices tested")->capture_default_str();

    auto* cc = app.add_subcommand("check-class", "Martingale-problem membership of a stopping measure");
    cc->add_option("--instance", inst)->required()->check(CLI::ExistingFile);
    cc->add_option("--measure", measure_file)->required()->check(CLI::ExistingFile);
    cc->add_option("--degree", degree)->capture_default_str()->check(CLI::Range(1, 4));
    cc->add_option("--mode", mode)->check(CLI::IsMember({"exact", "generator"}))->capture_default_str();
    cc->add_option("--tol", tol, "Generator mode: |statistic| <= tol * dt")->capture_default_str();
    cc->add_option("--weight-cap", cap)->capture_default_str();

    auto* gen = app.add_subcommand("gen", "Generate random instances");
    gen->add_option("--depth", shape.depth)->capture_default_str();
    gen->add_option("--branches", shape.branches)->capture_default_str();
    gen->add_option("--ineq", shape.ineq)->capture_default_str();
    gen->add_option("--eq", shape.eq)->capture_default_str();
    gen->add_flag("--path-dependent", shape.path_dependent);
    gen->add_option("--depth-cap", shape.depth_cap)->capture_default_str();
    gen->add_option("--count", count)->capture_default_str()->check(CLI::PositiveNumber);

    auto* suite = app.add_subcommand("suite", "Run verifiers over a directory of instances");
    suite->add_option("dir", suite_dir)->required()->check(CLI::ExistingDirectory);
    suite->add_option("kind", suite_kind, "equivalence|dpp|membership|all")->capture_default_str();
    suite->add_flag("--serial", serial, "Single-threaded");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    Run run;
    const auto start = Clock::now();
    try {
        if (*solve) {
            run.record.command = "solve";
            cmd_solve(run, inst, budgets_file, robust);
        } else if (*dp) {
            run.record.command = "dp";
            cmd_dp(run, inst, budget, grid);
        } else if (*der) {
            run.record.command = "derandomize";
            cmd_derandomize(run, inst, rule_file, eta);
        } else if (*mc) {
            run.record.command = "mc";
            cmd_mc(run, inst, rule_file, paths, g.seed, serial);
        } else if (*vd) {
            run.record.command = "verify-dpp";
            cmd_verify_dpp(run, inst, budgets_file, tau, g.seed, candidates);
        } else if (*cc) {
            run.record.command = "check-class";
            cmd_check_class(run, inst, measure_file, degree, mode, tol, cap);
        } else if (*gen) {
            run.record.command = "gen";
            if (!g.out.empty()) fs::create_directories(g.out);
            cmd_gen(run, g, shape, count);
        } else if (*suite) {
            run.record.command = "suite";
            cmd_suite(run, g, suite_dir, suite_kind, serial);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    run.record.seed = g.seed;
    run.record.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    if (g.format == "json") {
        std::cout << run.record.to_json().dump(2) << '\n';
    } else {
        std::cout << run.tsv.str();
        if (run.record.command != "gen") std::cout << "verdict\t" << (run.record.pass ? "pass" : "fail") << '\n';
    }
    if (!g.out.empty() && run.record.command != "suite") {
        try {
            fs::create_directories(g.out);
            write_json_atomic(fs::path(g.out) / (run.record.command + ".record.json"), run.record.to_json());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }
    return run.record.pass ? 0 : 1;
}
