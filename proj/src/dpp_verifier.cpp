#include "cstop/dpp_verifier.hpp"

#include "cstop/error.hpp"

#include <algorithm>
#include <exception>
#include <random>

namespace cstop {

Cut cut_at_depth(const TreeInstance& tree, int k) {
    if (k < 1 || k > tree.depth()) {
        throw Error(ErrorCode::InvalidInstance, "cut depth must lie in [1, " + std::to_string(tree.depth()) + "]");
    }
    return Cut{tree.nodes_at_depth(k)};
}

Cut make_cut(const TreeInstance& tree, std::vector<NodeId> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<bool> in(tree.size(), false);
    for (NodeId id : nodes) {
        if (id >= tree.size()) throw Error(ErrorCode::InvalidInstance, "cut node out of range");
        if (tree.node(id).depth < 1) throw Error(ErrorCode::InvalidInstance, "cut nodes must have depth >= 1");
        in[id] = true;
    }
    for (NodeId leaf : tree.leaves()) {
        int hits = 0;
        for (int k = 1; k <= tree.depth(); ++k) hits += in[tree.ancestor_at(leaf, k)] ? 1 : 0;
        if (hits != 1) {
            throw Error(ErrorCode::InvalidInstance, "path to node " + std::to_string(leaf) + " meets the cut " +
                                                        std::to_string(hits) + " times");
        }
    }
    return Cut{std::move(nodes)};
}

Cut first_randomization_cut(const TreeInstance& tree, const StoppingMeasure& m) {
    std::vector<NodeId> nodes;
    for (NodeId leaf : tree.leaves()) {
        NodeId pick = leaf;
        for (int k = 1; k <= tree.depth(); ++k) {
            NodeId a = tree.ancestor_at(leaf, k);
            if (sgn(m.stop[a]) > 0 && sgn(m.cont[a]) > 0) {
                pick = a;
                break;
            }
        }
        nodes.push_back(pick);
    }
    return make_cut(tree, std::move(nodes));
}

namespace {

std::vector<bool> pre_cut_mask(const TreeInstance& tree, const Cut& cut) {
    std::vector<bool> pre(tree.size(), false);
    for (NodeId c : cut.nodes) {
        for (int k = 0; k < tree.node(c).depth; ++k) pre[tree.ancestor_at(c, k)] = true;
    }
    return pre;
}

}  // namespace

Conditioned condition(const TreeInstance& tree, const StoppingMeasure& m, const Cut& cut) {
    if (std::string why = measure_violation(tree, m); !why.empty()) throw Error(ErrorCode::ShapeMismatch, why);
    Conditioned out;
    std::vector<bool> pre = pre_cut_mask(tree, cut);
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (pre[id] && sgn(m.stop[id]) > 0) out.budgets.stopped_before.push_back(id);
    }
    for (NodeId c : cut.nodes) {
        Rational r = m.reach(c);
        if (sgn(r) == 0) {
            out.budgets.zero_survival.push_back(c);
            continue;
        }
        const std::vector<NodeId> emb = tree.subtree_embedding(c);
        StoppingMeasure sub;
        sub.stop.resize(emb.size());
        sub.cont.resize(emb.size());
        Survivor s;
        s.node = c;
        s.mass = r;
        s.ybar.assign(tree.num_ineq(), ExtendedReal(0));
        s.zbar.assign(tree.num_eq(), ExtendedReal(0));
        const auto& base = tree.node(c).accrued;
        for (std::size_t i = 0; i < emb.size(); ++i) {
            sub.stop[i] = m.stop[emb[i]] / r;
            sub.cont[i] = m.cont[emb[i]] / r;
            if (sgn(sub.stop[i]) == 0) continue;
            const auto& acc = tree.node(emb[i]).accrued;
            for (std::size_t j = 0; j < tree.num_ineq(); ++j) {
                if (!acc.G[j].is_finite() || !base.G[j].is_finite()) {
                    s.ybar[j] = ExtendedReal::pos_inf();  // only possible on a vacuous row
                } else if (s.ybar[j].is_finite()) {
                    s.ybar[j] += ExtendedReal(sub.stop[i] * (acc.G[j].finite() - base.G[j].finite()));
                }
            }
            for (std::size_t j = 0; j < tree.num_eq(); ++j) {
                s.zbar[j] += ExtendedReal(sub.stop[i]) * (acc.H[j] - base.H[j]);
            }
        }
        out.budgets.survivors.push_back(std::move(s));
        out.sub_measures.push_back(std::move(sub));
    }
    return out;
}

StoppingMeasure paste(const TreeInstance& tree, const StoppingMeasure& prefix, const Cut& cut,
                      const std::vector<NodeId>& survivors, const std::vector<StoppingMeasure>& sub_measures) {
    if (prefix.stop.size() != tree.size() || prefix.cont.size() != tree.size() ||
        survivors.size() != sub_measures.size()) {
        throw Error(ErrorCode::ShapeMismatch, "paste inputs do not match the tree");
    }
    std::vector<bool> pre = pre_cut_mask(tree, cut);
    StoppingMeasure out;
    out.stop.assign(tree.size(), Rational(0));
    out.cont.assign(tree.size(), Rational(0));
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (pre[id]) {
            out.stop[id] = prefix.stop[id];
            out.cont[id] = prefix.cont[id];
        }
    }
    for (std::size_t k = 0; k < survivors.size(); ++k) {
        const NodeId c = survivors[k];
        if (!std::binary_search(cut.nodes.begin(), cut.nodes.end(), c)) {
            throw Error(ErrorCode::ShapeMismatch, "survivor " + std::to_string(c) + " is not a cut node");
        }
        const std::vector<NodeId> emb = tree.subtree_embedding(c);
        const StoppingMeasure& sub = sub_measures[k];
        if (sub.stop.size() != emb.size() || sub.cont.size() != emb.size()) {
            throw Error(ErrorCode::ShapeMismatch, "subtree measure at node " + std::to_string(c) + " has wrong size");
        }
        const Rational r = prefix.reach(c);
        for (std::size_t i = 0; i < emb.size(); ++i) {
            out.stop[emb[i]] = r * sub.stop[i];
            out.cont[emb[i]] = r * sub.cont[i];
        }
    }
    return out;
}

namespace {

struct Bracket {
    Rational value;
    std::vector<SolveResult> sub;  // per survivor
    std::vector<TreeInstance> instances;
};

Bracket evaluate_bracket(const TreeInstance& tree, const StoppingMeasure& m, const Conditioned& cond) {
    Bracket b;
    b.value = 0;
    for (NodeId id : cond.budgets.stopped_before) {
        const auto& n = tree.node(id);
        b.value += m.stop[id] * (n.accrued.F.finite() + n.terminal);
    }
    const std::size_t k = cond.budgets.survivors.size();
    b.sub.resize(k);
    b.instances.reserve(k);
    for (const Survivor& s : cond.budgets.survivors) b.instances.push_back(tree.subtree(s.node));
    std::vector<std::exception_ptr> errors(k);
    const auto nk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < nk; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            const Survivor& s = cond.budgets.survivors[i];
            BudgetVector sb{s.ybar, s.zbar};
            MeasureAudit a = audit_measure(b.instances[i], cond.sub_measures[i], sb);
            if (!a.feasible) {
                throw Error(ErrorCode::SubproblemInfeasible, "conditioned law at node " + std::to_string(s.node) +
                                                                 " violates its budgets: " + a.reason);
            }
            b.sub[i] = solve_weak(b.instances[i], sb);
            if (b.sub[i].status != SolveStatus::Optimal) {
                throw Error(ErrorCode::SubproblemInfeasible,
                            "subtree LP at node " + std::to_string(s.node) + " is " + to_string(b.sub[i].status));
            }
            if (!b.sub[i].value.is_finite()) {
                throw Error(ErrorCode::InvalidInstance, "subtree value is not finite");
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < k; ++i) {
        const Survivor& s = cond.budgets.survivors[i];
        b.value += s.mass * (tree.node(s.node).accrued.F.finite() + b.sub[i].value.finite());
    }
    return b;
}

Rational abs_q(const Rational& q) { return sgn(q) < 0 ? Rational(-q) : q; }

}  // namespace

DppReport verify_dpp(const TreeInstance& tree, const BudgetVector& budgets, const Cut& cut, const DppOptions& options) {
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& n = tree.node(id);
        if (!(n.accrued.F + ExtendedReal(n.terminal)).is_finite()) {
            throw Error(ErrorCode::InvalidInstance, "DPP verification needs finite rewards");
        }
    }
    SolveResult top = solve_weak(tree, budgets);
    if (top.status != SolveStatus::Optimal) throw Error(ErrorCode::InvalidInstance, "instance is infeasible");

    DppReport rep;
    rep.lhs = top.value.finite();

    std::vector<StoppingMeasure> candidates{top.measure};
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<int> coef(-16, 16);
    for (std::size_t c = 0; c < options.random_candidates; ++c) {
        std::vector<Rational> obj(tree.size());
        for (auto& o : obj) o = ratio(coef(rng), 8);
        SolveResult r = solve_with_objective(tree, budgets, obj);
        if (r.status == SolveStatus::Optimal) candidates.push_back(std::move(r.measure));
    }
    rep.candidates = candidates.size();

    rep.super_ok = true;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const StoppingMeasure& P = candidates[c];
        Conditioned cond = condition(tree, P, cut);
        Bracket br = evaluate_bracket(tree, P, cond);

        std::vector<NodeId> surv;
        std::vector<StoppingMeasure> optimal;
        for (std::size_t i = 0; i < cond.budgets.survivors.size(); ++i) {
            surv.push_back(cond.budgets.survivors[i].node);
            optimal.push_back(br.sub[i].measure);
        }
        StoppingMeasure pasted = paste(tree, P, cut, surv, optimal);
        MeasureAudit audit = audit_measure(tree, pasted, budgets);
        if (!audit.feasible || audit.value != ExtendedReal(br.value) || br.value > rep.lhs) rep.super_ok = false;

        if (c == 0) {
            rep.rhs_sub = br.value;
            rep.rhs_super = br.value;
            rep.zero_survival = cond.budgets.zero_survival.size();
            for (std::size_t i = 0; i < cond.budgets.survivors.size(); ++i) {
                const Survivor& s = cond.budgets.survivors[i];
                DppNodeReport nr;
                nr.node = s.node;
                nr.word = word_to_string(tree.word_of(s.node), tree.max_branches());
                nr.mass = s.mass;
                nr.ybar = s.ybar;
                nr.zbar = s.zbar;
                nr.conditional_value = measure_value(br.instances[i], cond.sub_measures[i]).finite();
                nr.sub_value = br.sub[i].value.finite();
                rep.per_node.push_back(std::move(nr));
            }
        } else if (br.value > rep.rhs_super) {
            rep.rhs_super = br.value;
        }
    }
    rep.sub_ok = rep.rhs_sub >= rep.lhs;
    Rational g1 = abs_q(rep.rhs_sub - rep.lhs);
    Rational g2 = abs_q(rep.rhs_super - rep.lhs);
    rep.gap = g1 > g2 ? g1 : g2;
    rep.pass = rep.sub_ok && rep.super_ok && sgn(rep.gap) == 0;
    return rep;
}

}  // namespace cstop
