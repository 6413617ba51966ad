#include "cstop/martingale.hpp"

#include "cstop/error.hpp"
#include "cstop/stopping_rules.hpp"

#include <algorithm>

namespace cstop {

Polynomial Polynomial::monomial(std::vector<int> exponent) {
    Polynomial p(exponent.size());
    p.add_term(std::move(exponent), Rational(1));
    return p;
}

int Polynomial::degree() const {
    int d = 0;
    for (const Term& t : terms_) {
        int s = 0;
        for (int e : t.exponent) s += e;
        d = std::max(d, s);
    }
    return d;
}

void Polynomial::add_term(std::vector<int> exponent, const Rational& coef) {
    if (exponent.size() != vars_) throw Error(ErrorCode::ShapeMismatch, "exponent length does not match variables");
    if (sgn(coef) == 0) return;
    for (Term& t : terms_) {
        if (t.exponent == exponent) {
            t.coef += coef;
            return;
        }
    }
    terms_.push_back({std::move(exponent), coef});
}

Rational Polynomial::evaluate(std::span<const Rational> point) const {
    Rational total = 0;
    Rational term;
    for (const Term& t : terms_) {
        term = t.coef;
        for (std::size_t i = 0; i < vars_; ++i) {
            for (int e = 0; e < t.exponent[i]; ++e) term *= point[i];
        }
        total += term;
    }
    return total;
}

Polynomial Polynomial::derivative(std::size_t var) const {
    Polynomial out(vars_);
    for (const Term& t : terms_) {
        if (t.exponent[var] == 0) continue;
        std::vector<int> e = t.exponent;
        Rational c = t.coef * e[var];
        --e[var];
        out.add_term(std::move(e), c);
    }
    return out;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const Term& t : terms_) {
        if (!out.empty()) out += " + ";
        std::string mono;
        for (std::size_t i = 0; i < vars_; ++i) {
            if (t.exponent[i] == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += "v" + std::to_string(i);
            if (t.exponent[i] > 1) mono += "^" + std::to_string(t.exponent[i]);
        }
        if (t.coef != 1 || mono.empty()) out += cstop::to_string(t.coef) + (mono.empty() ? "" : "*");
        out += mono;
    }
    return out;
}

namespace {

void exponents(std::size_t vars, int total, std::vector<int>& cur, std::size_t i, std::vector<std::vector<int>>& out) {
    if (i + 1 == vars) {
        cur[i] = total;
        out.push_back(cur);
        return;
    }
    for (int e = total; e >= 0; --e) {
        cur[i] = e;
        exponents(vars, total - e, cur, i + 1, out);
    }
}

}  // namespace

std::vector<Polynomial> test_functions(std::size_t vars, int degree) {
    if (degree > 4) throw Error(ErrorCode::DegreeTooHigh, "degree " + std::to_string(degree) + " > 4");
    if (degree < 1) throw Error(ErrorCode::DegreeTooHigh, "degree must be >= 1");
    std::vector<Polynomial> out;
    for (int d = 1; d <= degree; ++d) {
        std::vector<std::vector<int>> exps;
        std::vector<int> cur(vars, 0);
        exponents(vars, d, cur, 0, exps);
        for (auto& e : exps) out.push_back(Polynomial::monomial(std::move(e)));
    }
    return out;
}

Candidate candidate_from_measure(const TreeInstance& tree, const StoppingMeasure& m) {
    if (std::string why = measure_violation(tree, m); !why.empty()) throw Error(ErrorCode::ShapeMismatch, why);
    Candidate c;
    const int N = tree.depth();
    for (NodeId leaf : tree.leaves()) {
        std::vector<Rational> row(static_cast<std::size_t>(N) + 1);
        const Rational& pl = tree.node(leaf).path_prob;
        for (int k = 0; k <= N; ++k) {
            NodeId a = tree.ancestor_at(leaf, k);
            row[static_cast<std::size_t>(k)] = m.stop[a] * pl / tree.node(a).path_prob;
        }
        c.mass.push_back(std::move(row));
    }
    c.pre_start.assign(tree.leaves().size(), Rational(0));
    for (const auto& n : tree.nodes()) {
        c.brownian.push_back(n.brownian);
        c.state.push_back(n.state);
    }
    c.history = tree.config().history;
    return c;
}

Candidate candidate_from_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule,
                              const std::vector<std::vector<Rational>>& branch_probs) {
    ThetaProcess theta = theta_of_rule(tree, rule);
    if (!branch_probs.empty() && branch_probs.size() != tree.size()) {
        throw Error(ErrorCode::ShapeMismatch, "branch probability override needs one entry per node");
    }
    std::vector<Rational> prob(tree.size());
    for (NodeId id = 0; id < tree.size(); ++id) {
        const auto& n = tree.node(id);
        if (!n.parent) {
            prob[id] = 1;
            continue;
        }
        const auto j = static_cast<std::size_t>(n.branch);
        Rational p = branch_probs.empty() ? tree.law_at(n.depth - 1)[j].prob : branch_probs[*n.parent].at(j);
        prob[id] = prob[*n.parent] * p;
    }
    Candidate c;
    const int N = tree.depth();
    for (NodeId leaf : tree.leaves()) {
        std::vector<Rational> row(static_cast<std::size_t>(N) + 1);
        Rational before = 0;
        for (int k = 0; k <= N; ++k) {
            const Rational& th = theta.theta[tree.ancestor_at(leaf, k)];
            row[static_cast<std::size_t>(k)] = prob[leaf] * (th - before);
            before = th;
        }
        c.mass.push_back(std::move(row));
    }
    c.pre_start.assign(tree.leaves().size(), Rational(0));
    for (const auto& n : tree.nodes()) {
        c.brownian.push_back(n.brownian);
        c.state.push_back(n.state);
    }
    c.history = tree.config().history;
    return c;
}

namespace {

State xi_of(const Candidate& c, NodeId id) {
    State xi = c.brownian[id];
    xi.insert(xi.end(), c.state[id].begin(), c.state[id].end());
    return xi;
}

/// Observed history with x(t0) replaced by the candidate's root state, then the states down to `id`.
Path observed_path(const TreeInstance& tree, const Candidate& c, NodeId id) {
    Path p(c.history.begin(), c.history.end() - 1);
    const int k = tree.node(id).depth;
    for (int j = 0; j <= k; ++j) p.push_back(c.state[tree.ancestor_at(id, j)]);
    return p;
}

struct Derivatives {
    std::vector<Polynomial> grad;
    std::vector<std::vector<Polynomial>> hess;
};

Derivatives derivatives_of(const Polynomial& phi) {
    Derivatives d;
    const std::size_t n = phi.vars();
    for (std::size_t a = 0; a < n; ++a) d.grad.push_back(phi.derivative(a));
    d.hess.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) d.hess[a].push_back(d.grad[a].derivative(b));
    }
    return d;
}

Rational compensator_step(const TreeInstance& tree, const Candidate& c, const Polynomial& phi, const Derivatives& der,
                          NodeId id, CompensatorMode mode) {
    const auto& node = tree.node(id);
    const std::size_t d = tree.noise_dim();
    const std::size_t l = tree.state_dim();
    const Path path = observed_path(tree, c, id);
    const State xi = xi_of(c, id);
    if (mode == CompensatorMode::ExactDiscrete) {
        Rational expected = 0;
        State next(d + l);
        for (const Branch& br : tree.law_at(node.depth)) {
            State x = euler_step(tree.config(), node.time, path, br.increment);
            for (std::size_t a = 0; a < d; ++a) next[a] = xi[a] + br.increment[a];
            for (std::size_t i = 0; i < l; ++i) next[d + i] = x[i];
            expected += br.prob * phi.evaluate(next);
        }
        return expected - phi.evaluate(xi);
    }
    const State b = tree.config().coefficients.drift(node.time, path);
    const std::vector<Rational> sigma = tree.config().coefficients.diffusion(node.time, path);
    // sigma_bar = (I_d ; sigma), rows indexed by the d + l variables
    auto sbar = [&](std::size_t row, std::size_t m) -> Rational {
        if (row < d) return Rational(row == m ? 1 : 0);
        return sigma[(row - d) * d + m];
    };
    Rational gen = 0;
    for (std::size_t i = 0; i < l; ++i) {
        if (sgn(b[i]) != 0) gen += b[i] * der.grad[d + i].evaluate(xi);
    }
    Rational a_ab;
    for (std::size_t a = 0; a < d + l; ++a) {
        for (std::size_t bb = 0; bb < d + l; ++bb) {
            if (der.hess[a][bb].terms().empty()) continue;
            a_ab = 0;
            for (std::size_t m = 0; m < d; ++m) a_ab += sbar(a, m) * sbar(bb, m);
            if (sgn(a_ab) != 0) gen += a_ab * der.hess[a][bb].evaluate(xi) / 2;
        }
    }
    return gen * tree.dt();
}

void check_candidate(const TreeInstance& tree, const Candidate& c) {
    const std::size_t leaves = tree.leaves().size();
    const auto cols = static_cast<std::size_t>(tree.depth()) + 1;
    if (c.mass.size() != leaves || c.pre_start.size() != leaves) {
        throw Error(ErrorCode::ShapeMismatch, "candidate mass table does not match the leaves");
    }
    for (const auto& row : c.mass) {
        if (row.size() != cols) throw Error(ErrorCode::ShapeMismatch, "candidate needs N + 1 stop depths per leaf");
    }
    if (c.brownian.size() != tree.size() || c.state.size() != tree.size()) {
        throw Error(ErrorCode::ShapeMismatch, "candidate needs observed values at every node");
    }
    for (NodeId id = 0; id < tree.size(); ++id) {
        if (c.brownian[id].size() != tree.noise_dim() || c.state[id].size() != tree.state_dim()) {
            throw Error(ErrorCode::ShapeMismatch, "observed value has the wrong dimension");
        }
    }
    if (c.history.empty() || c.history.back().size() != tree.state_dim()) {
        throw Error(ErrorCode::ShapeMismatch, "observed history is empty or has the wrong dimension");
    }
}

}  // namespace

std::vector<Rational> compensated_process(const TreeInstance& tree, const Candidate& c, const Polynomial& phi,
                                          CompensatorMode mode) {
    check_candidate(tree, c);
    if (phi.vars() != tree.noise_dim() + tree.state_dim()) {
        throw Error(ErrorCode::ShapeMismatch, "test function has the wrong number of variables");
    }
    const Derivatives der = mode == CompensatorMode::Generator ? derivatives_of(phi) : Derivatives{};
    std::vector<Rational> M(tree.size());
    std::vector<Rational> comp(tree.size());
    std::vector<Rational> value(tree.size());
    for (NodeId id = 0; id < tree.size(); ++id) {
        value[id] = phi.evaluate(xi_of(c, id));
        const auto& n = tree.node(id);
        M[id] = n.parent ? M[*n.parent] + value[id] - value[*n.parent] - comp[*n.parent] : value[id];
        if (!tree.is_leaf(id)) comp[id] = compensator_step(tree, c, phi, der, id, mode);
    }
    return M;
}

std::vector<Rational> compensated_process(const TreeInstance& tree, const Polynomial& phi, CompensatorMode mode) {
    Candidate c;
    c.mass.assign(tree.leaves().size(), std::vector<Rational>(static_cast<std::size_t>(tree.depth()) + 1));
    c.pre_start.assign(tree.leaves().size(), Rational(0));
    for (const auto& n : tree.nodes()) {
        c.brownian.push_back(n.brownian);
        c.state.push_back(n.state);
    }
    c.history = tree.config().history;
    return compensated_process(tree, c, phi, mode);
}

namespace {

struct Factor {
    int time = 0;
    int coord = -1;  // -1: no box
    bool above = false;
    Rational threshold;
    int stop = 0;  // 0 none, 1 stopped by time, 2 not stopped by time
};

std::string describe(const std::vector<Factor>& w, std::size_t d) {
    if (w.empty()) return "1";
    std::string out;
    for (const Factor& f : w) {
        if (!out.empty()) out += "*";
        out += "[";
        if (f.coord >= 0) {
            const auto c = static_cast<std::size_t>(f.coord);
            out += (c < d ? "w" + std::to_string(c) : "x" + std::to_string(c - d)) + "@" + std::to_string(f.time) +
                   (f.above ? ">" : "<=") + to_string(f.threshold);
        }
        if (f.stop != 0) {
            if (f.coord >= 0) out += ";";
            out += std::string(f.stop == 1 ? "tau<=" : "tau>") + std::to_string(f.time);
        }
        out += "]";
    }
    return out;
}

struct WeightFamily {
    std::vector<std::string> description;
    /// mask[w][node_index * (s + 2) + cls]
    std::vector<std::vector<char>> mask;
};

WeightFamily weights_for(const TreeInstance& tree, const Candidate& c, int s, std::size_t cap) {
    const std::size_t vars = tree.noise_dim() + tree.state_dim();
    std::vector<Factor> singles;
    for (int si = 0; si <= s; ++si) {
        singles.push_back({si, -1, false, Rational(0), 1});
        singles.push_back({si, -1, false, Rational(0), 2});
        const std::vector<NodeId> level = tree.nodes_at_depth(si);
        for (std::size_t v = 0; v < vars; ++v) {
            std::vector<Rational> vals;
            for (NodeId id : level) vals.push_back(xi_of(c, id)[v]);
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                Rational thr = (vals[i] + vals[i + 1]) / 2;
                for (bool above : {false, true}) {
                    for (int st : {0, 1, 2}) singles.push_back({si, static_cast<int>(v), above, thr, st});
                }
            }
        }
    }
    std::vector<std::vector<Factor>> family{{}};
    for (const Factor& f : singles) {
        if (family.size() >= cap) break;
        family.push_back({f});
    }
    for (std::size_t i = 0; i < singles.size() && family.size() < cap; ++i) {
        for (std::size_t j = i + 1; j < singles.size() && family.size() < cap; ++j) {
            if (singles[i].time == singles[j].time && singles[i].coord == singles[j].coord) continue;
            family.push_back({singles[i], singles[j]});
        }
    }

    const std::vector<NodeId> level = tree.nodes_at_depth(s);
    const auto classes = static_cast<std::size_t>(s) + 2;
    WeightFamily out;
    for (const auto& w : family) {
        std::vector<char> mask(level.size() * classes, 0);
        for (std::size_t vi = 0; vi < level.size(); ++vi) {
            for (std::size_t cls = 0; cls < classes; ++cls) {
                bool on = true;
                for (const Factor& f : w) {
                    if (f.coord >= 0) {
                        const Rational& x = xi_of(c, tree.ancestor_at(level[vi], f.time))[static_cast<std::size_t>(f.coord)];
                        if ((x > f.threshold) != f.above) on = false;
                    }
                    const bool stopped = cls <= static_cast<std::size_t>(f.time);
                    if (f.stop == 1 && !stopped) on = false;
                    if (f.stop == 2 && stopped) on = false;
                }
                mask[vi * classes + cls] = on ? 1 : 0;
            }
        }
        out.description.push_back(describe(w, tree.noise_dim()));
        out.mask.push_back(std::move(mask));
    }
    return out;
}

struct Partial {
    std::size_t tests = 0;
    Rational max_abs = 0;
    std::optional<MembershipStat> worst;
    std::size_t failures = 0;
    std::vector<MembershipStat> failing;
};

}  // namespace

MembershipReport check_membership(const TreeInstance& tree, const Candidate& c, const MembershipOptions& opt) {
    check_candidate(tree, c);
    const std::size_t vars = tree.noise_dim() + tree.state_dim();
    const std::vector<Polynomial> phis = test_functions(vars, opt.degree);
    const int N = tree.depth();

    MembershipReport rep;
    rep.threshold = opt.mode == CompensatorMode::ExactDiscrete ? Rational(0) : Rational(snap(opt.tolerance) * tree.dt());

    rep.clause2 = true;
    for (std::size_t i = 0; i < c.pre_start.size(); ++i) {
        if (sgn(c.pre_start[i]) != 0) {
            rep.clause2 = false;
            rep.clause2_reason = "mass stopped before t0 on leaf " + std::to_string(i);
            break;
        }
    }
    if (rep.clause2 && c.history != tree.config().history) {
        rep.clause2 = false;
        rep.clause2_reason = "observed history differs from the pinned path";
    }
    if (rep.clause2 && c.state[tree.root()] != tree.config().history.back()) {
        rep.clause2 = false;
        rep.clause2_reason = "state at t0 differs from x(t0)";
    }
    if (rep.clause2) {
        for (const Rational& w : c.brownian[tree.root()]) {
            if (sgn(w) != 0) {
                rep.clause2 = false;
                rep.clause2_reason = "Brownian coordinate does not start at 0";
            }
        }
    }
    for (const auto& row : c.mass) {
        for (const Rational& q : row) {
            if (sgn(q) < 0) throw Error(ErrorCode::ShapeMismatch, "negative candidate mass");
        }
    }

    std::vector<WeightFamily> weights;
    for (int s = 0; s < N; ++s) weights.push_back(weights_for(tree, c, s, opt.weight_cap));

    const std::span<const NodeId> leaves = tree.leaves();
    std::vector<Partial> parts(phis.size());
    const auto np = static_cast<std::ptrdiff_t>(phis.size());

    auto run = [&](std::size_t pi) {
        Partial& out = parts[pi];
        const std::vector<Rational> M = compensated_process(tree, c, phis[pi], opt.mode);
        const std::string phi_name = phis[pi].to_string();
        for (int s = 0; s < N; ++s) {
            const std::vector<NodeId> level = tree.nodes_at_depth(s);
            const NodeId first = level.front();
            const auto classes = static_cast<std::size_t>(s) + 2;
            for (int r = s + 1; r <= N; ++r) {
                std::vector<Rational> D(level.size() * classes, Rational(0));
                for (std::size_t li = 0; li < leaves.size(); ++li) {
                    const NodeId leaf = leaves[li];
                    const NodeId vs = tree.ancestor_at(leaf, s);
                    Rational inc = M[tree.ancestor_at(leaf, r)] - M[vs];
                    if (sgn(inc) == 0) continue;
                    const std::size_t base = (vs - first) * classes;
                    for (int k = 0; k <= N; ++k) {
                        const Rational& q = c.mass[li][static_cast<std::size_t>(k)];
                        if (sgn(q) == 0) continue;
                        const std::size_t cls = std::min<std::size_t>(static_cast<std::size_t>(k), classes - 1);
                        D[base + cls] += q * inc;
                    }
                }
                const WeightFamily& wf = weights[static_cast<std::size_t>(s)];
                Rational stat;
                for (std::size_t w = 0; w < wf.mask.size(); ++w) {
                    stat = 0;
                    const auto& mask = wf.mask[w];
                    for (std::size_t i = 0; i < D.size(); ++i) {
                        if (mask[i] && sgn(D[i]) != 0) stat += D[i];
                    }
                    ++out.tests;
                    Rational mag = abs(stat);
                    const bool fail = mag > rep.threshold;
                    if (!out.worst || mag > out.max_abs) {
                        out.max_abs = mag;
                        out.worst = MembershipStat{phi_name, s, r, wf.description[w], stat};
                    }
                    if (fail) {
                        ++out.failures;
                        if (out.failing.size() < opt.keep_failures) {
                            out.failing.push_back({phi_name, s, r, wf.description[w], stat});
                        }
                    }
                }
            }
        }
    };

    if (opt.exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < np; ++i) run(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < phis.size(); ++i) run(i);
    }

    rep.max_abs = 0;
    bool have_worst = false;
    for (const Partial& p : parts) {
        rep.tests += p.tests;
        rep.failures += p.failures;
        if (p.worst && (!have_worst || p.max_abs > rep.max_abs)) {
            rep.max_abs = p.max_abs;
            rep.worst = *p.worst;
            have_worst = true;
        }
        for (const auto& f : p.failing) {
            if (rep.failing.size() < opt.keep_failures) rep.failing.push_back(f);
        }
    }
    rep.clause1 = rep.failures == 0;
    rep.pass = rep.clause1 && rep.clause2;
    return rep;
}

}  // namespace cstop
