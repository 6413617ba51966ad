#include "cstop/tree.hpp"

#include "cstop/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cstop {

Functional make_functional(Expression e) {
    return [e = std::move(e)](const Rational& t, const Path& path) { return e.evaluate(t, path); };
}

namespace {

void validate(const TreeConfig& c) {
    if (c.depth < 0) throw Error(ErrorCode::InvalidHorizon, "depth must be >= 0, got " + std::to_string(c.depth));
    if (c.dt <= 0) throw Error(ErrorCode::InvalidInstance, "dt must be positive");
    if (c.noise_dim == 0 || c.state_dim == 0) throw Error(ErrorCode::InvalidInstance, "dimensions must be positive");
    if (c.branching.empty()) throw Error(ErrorCode::InvalidBranching, "no branch law given");
    if (c.branching.size() != 1 && c.branching.size() != static_cast<std::size_t>(c.depth)) {
        throw Error(ErrorCode::InvalidBranching, "branching must be uniform or one law per step");
    }
    for (const BranchLaw& law : c.branching) {
        if (law.empty()) throw Error(ErrorCode::InvalidBranching, "empty branch law");
        Rational total = 0;
        for (const Branch& b : law) {
            if (b.prob <= 0) throw Error(ErrorCode::InvalidBranching, "branch probability " + to_string(b.prob) + " <= 0");
            if (b.increment.size() != c.noise_dim) {
                throw Error(ErrorCode::InvalidBranching, "increment dimension does not match noise_dim");
            }
            total += b.prob;
        }
        if (total != 1) throw Error(ErrorCode::InvalidBranching, "branch probabilities sum to " + to_string(total));
    }
    if (c.history.empty()) throw Error(ErrorCode::InvalidInstance, "history path must contain x(t0)");
    for (const State& s : c.history) {
        if (s.size() != c.state_dim) throw Error(ErrorCode::InvalidInstance, "history state has wrong dimension");
    }
    if (!c.coefficients.drift || !c.coefficients.diffusion) {
        throw Error(ErrorCode::InvalidInstance, "drift and diffusion are required");
    }
    if (!c.reward || !c.terminal) throw Error(ErrorCode::InvalidInstance, "reward and terminal payoff are required");
    for (const auto& g : c.constraints.ineq) {
        if (!g.g) throw Error(ErrorCode::InvalidInstance, "inequality constraint without functional");
        if (g.bound.is_neg_inf()) throw Error(ErrorCode::InvalidInstance, "inequality bound must be > -inf");
    }
    for (const auto& h : c.constraints.eq) {
        if (!h.h) throw Error(ErrorCode::InvalidInstance, "equality constraint without functional");
    }
}

}  // namespace

State euler_step(const TreeConfig& config, const Rational& t, const Path& path, std::span<const Rational> increment) {
    const std::size_t l = config.state_dim;
    const std::size_t d = config.noise_dim;
    State b = config.coefficients.drift(t, path);
    std::vector<Rational> sigma = config.coefficients.diffusion(t, path);
    if (b.size() != l || sigma.size() != l * d) {
        throw Error(ErrorCode::InvalidInstance, "coefficient dimensions do not match (l, d)");
    }
    State next = path.back();
    for (std::size_t i = 0; i < l; ++i) {
        next[i] += b[i] * config.dt;
        for (std::size_t j = 0; j < d; ++j) next[i] += sigma[i * d + j] * increment[j];
    }
    return next;
}

TreeInstance::TreeInstance(TreeConfig config) : config_(std::move(config)) {
    validate(config_);
    const std::size_t n_ineq = config_.constraints.ineq.size();
    const std::size_t n_eq = config_.constraints.eq.size();

    Node root;
    root.brownian.assign(config_.noise_dim, Rational(0));
    root.state = config_.history.back();
    root.time = config_.t0;
    root.accrued.G.assign(n_ineq, ExtendedReal(0));
    root.accrued.H.assign(n_eq, ExtendedReal(0));
    nodes_.push_back(std::move(root));

    // Paths are kept alongside the BFS frontier only.
    std::vector<Path> frontier_paths{config_.history};
    std::size_t frontier_begin = 0;

    auto evaluate = [&](Node& n, const Path& path) {
        n.reward_rate = config_.reward(n.time, path);
        n.terminal = [&] {
            ExtendedReal v = config_.terminal(n.time, path);
            if (!v.is_finite()) throw Error(ErrorCode::NonFinite, "terminal payoff must be finite");
            return v.finite();
        }();
        n.ineq_rate.clear();
        n.eq_rate.clear();
        for (const auto& c : config_.constraints.ineq) n.ineq_rate.push_back(c.g(n.time, path));
        for (const auto& c : config_.constraints.eq) n.eq_rate.push_back(c.h(n.time, path));
    };
    evaluate(nodes_[0], frontier_paths[0]);

    for (int k = 0; k < config_.depth; ++k) {
        const BranchLaw& law = law_at(k);
        const std::size_t frontier_end = nodes_.size();
        std::vector<Path> next_paths;
        next_paths.reserve((frontier_end - frontier_begin) * law.size());
        for (NodeId id = frontier_begin; id < frontier_end; ++id) {
            const Path& path = frontier_paths[id - frontier_begin];
            nodes_[id].first_child = nodes_.size();
            nodes_[id].num_children = law.size();
            for (std::size_t j = 0; j < law.size(); ++j) {
                const Node& parent = nodes_[id];
                Node child;
                child.parent = id;
                child.branch = static_cast<int>(j);
                child.depth = k + 1;
                child.path_prob = parent.path_prob * law[j].prob;
                child.brownian = parent.brownian;
                for (std::size_t c = 0; c < config_.noise_dim; ++c) child.brownian[c] += law[j].increment[c];
                child.state = euler_step(config_, parent.time, path, law[j].increment);
                child.time = parent.time + config_.dt;
                child.accrued.F = parent.accrued.F + parent.reward_rate * ExtendedReal(config_.dt);
                child.accrued.G.resize(n_ineq);
                child.accrued.H.resize(n_eq);
                for (std::size_t i = 0; i < n_ineq; ++i) {
                    child.accrued.G[i] = parent.accrued.G[i] + parent.ineq_rate[i] * ExtendedReal(config_.dt);
                }
                for (std::size_t i = 0; i < n_eq; ++i) {
                    child.accrued.H[i] = parent.accrued.H[i] + parent.eq_rate[i] * ExtendedReal(config_.dt);
                }
                Path child_path = path;
                child_path.push_back(child.state);
                evaluate(child, child_path);
                nodes_.push_back(std::move(child));
                next_paths.push_back(std::move(child_path));
            }
        }
        frontier_paths = std::move(next_paths);
        frontier_begin = frontier_end;
    }
    for (NodeId id = frontier_begin; id < nodes_.size(); ++id) leaves_.push_back(id);
}

TreeInstance build_tree(TreeConfig config) { return TreeInstance(std::move(config)); }

const BranchLaw& TreeInstance::law_at(int depth) const {
    if (config_.branching.size() == 1) return config_.branching.front();
    return config_.branching.at(static_cast<std::size_t>(depth));
}

std::size_t TreeInstance::max_branches() const {
    std::size_t m = 0;
    for (const auto& law : config_.branching) m = std::max(m, law.size());
    return m;
}

std::vector<NodeId> TreeInstance::nodes_at_depth(int k) const {
    std::vector<NodeId> out;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (nodes_[id].depth == k) out.push_back(id);
    }
    return out;
}

std::vector<NodeId> TreeInstance::children(NodeId id) const {
    const Node& n = nodes_.at(id);
    std::vector<NodeId> out(n.num_children);
    for (std::size_t j = 0; j < n.num_children; ++j) out[j] = n.first_child + j;
    return out;
}

NodeId TreeInstance::find(const Word& word) const {
    if (word.size() > static_cast<std::size_t>(config_.depth)) {
        throw Error(ErrorCode::NodeNotInTree, "word longer than the tree depth");
    }
    NodeId id = 0;
    for (int b : word) {
        const Node& n = nodes_[id];
        if (b < 0 || static_cast<std::size_t>(b) >= n.num_children) {
            throw Error(ErrorCode::NodeNotInTree, "branch index " + std::to_string(b) + " out of range");
        }
        id = n.first_child + static_cast<std::size_t>(b);
    }
    return id;
}

Word TreeInstance::word_of(NodeId id) const {
    Word w(static_cast<std::size_t>(nodes_.at(id).depth));
    while (nodes_[id].parent) {
        w[static_cast<std::size_t>(nodes_[id].depth - 1)] = nodes_[id].branch;
        id = *nodes_[id].parent;
    }
    return w;
}

Path TreeInstance::path_to(NodeId id) const {
    std::vector<NodeId> chain;
    for (std::optional<NodeId> cur = id; cur && nodes_[*cur].parent; cur = nodes_[*cur].parent) chain.push_back(*cur);
    Path path = config_.history;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) path.push_back(nodes_[*it].state);
    return path;
}

bool TreeInstance::is_ancestor(NodeId ancestor, NodeId id) const {
    const int d = nodes_.at(ancestor).depth;
    if (nodes_.at(id).depth < d) return false;
    return ancestor_at(id, d) == ancestor;
}

NodeId TreeInstance::ancestor_at(NodeId id, int depth) const {
    if (depth < 0 || depth > nodes_.at(id).depth) throw Error(ErrorCode::NodeNotInTree, "no ancestor at that depth");
    while (nodes_[id].depth > depth) id = *nodes_[id].parent;
    return id;
}

TreeInstance TreeInstance::subtree(NodeId id) const {
    const Node& n = nodes_.at(id);
    TreeConfig c = config_;
    c.t0 = n.time;
    c.depth = config_.depth - n.depth;
    c.history = path_to(id);
    std::vector<NodeId> chain;
    for (NodeId cur = id; nodes_[cur].parent; cur = *nodes_[cur].parent) chain.push_back(cur);
    State w_now = c.brownian_history.empty() ? State(config_.noise_dim, Rational(0)) : c.brownian_history.back();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const Node& step = nodes_[*it];
        const Node& parent = nodes_[*step.parent];
        for (std::size_t k = 0; k < w_now.size(); ++k) w_now[k] += step.brownian[k] - parent.brownian[k];
        c.brownian_history.push_back(w_now);
    }
    if (config_.branching.size() > 1) {
        c.branching.assign(config_.branching.begin() + n.depth, config_.branching.end());
        if (c.branching.empty()) c.branching = {config_.branching.back()};
    }
    return TreeInstance(std::move(c));
}

std::vector<NodeId> TreeInstance::subtree_embedding(NodeId id) const {
    std::vector<NodeId> out{id};
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Node& n = nodes_[out[i]];
        for (std::size_t j = 0; j < n.num_children; ++j) out.push_back(n.first_child + j);
    }
    return out;
}

BudgetVector TreeInstance::declared_budgets() const {
    BudgetVector b;
    for (const auto& c : config_.constraints.ineq) b.y.push_back(c.bound);
    for (const auto& c : config_.constraints.eq) b.z.push_back(c.target);
    return b;
}

Path euler_state(const TreeInstance& tree, const Word& word) {
    if (word.size() > static_cast<std::size_t>(tree.depth())) {
        throw Error(ErrorCode::WordTooLong, "word of length " + std::to_string(word.size()) + " exceeds depth " +
                                                std::to_string(tree.depth()));
    }
    const TreeConfig& c = tree.config();
    Path path = c.history;
    Rational t = c.t0;
    for (std::size_t k = 0; k < word.size(); ++k) {
        const BranchLaw& law = tree.law_at(static_cast<int>(k));
        if (word[k] < 0 || static_cast<std::size_t>(word[k]) >= law.size()) {
            throw Error(ErrorCode::NodeNotInTree, "branch index out of range");
        }
        path.push_back(euler_step(c, t, path, law[static_cast<std::size_t>(word[k])].increment));
        t += c.dt;
    }
    return path;
}

NodeFunctionals cumulative_functionals(const TreeInstance& tree, const Word& word) {
    return tree.node(tree.find(word)).accrued;
}

LipschitzReport check_lipschitz(const TreeInstance& tree, const std::function<double(double)>& kappa,
                                std::size_t pairs, std::uint64_t seed) {
    LipschitzReport report;
    if (tree.depth() == 0) return report;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_depth(1, tree.depth());
    const TreeConfig& c = tree.config();
    for (std::size_t p = 0; p < pairs; ++p) {
        std::vector<NodeId> level = tree.nodes_at_depth(pick_depth(rng));
        std::uniform_int_distribution<std::size_t> pick(0, level.size() - 1);
        NodeId a = level[pick(rng)];
        NodeId b = level[pick(rng)];
        if (a == b) continue;
        Path pa = tree.path_to(a);
        Path pb = tree.path_to(b);
        const Rational& t = tree.node(a).time;
        double dx = 0;
        for (std::size_t k = 0; k < pa.size(); ++k) {
            double s = 0;
            for (std::size_t i = 0; i < pa[k].size(); ++i) {
                double diff = to_double(pa[k][i] - pb[k][i]);
                s += diff * diff;
            }
            dx = std::max(dx, std::sqrt(s));
        }
        auto norm = [](const std::vector<Rational>& u, const std::vector<Rational>& v) {
            double s = 0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                double diff = to_double(u[i] - v[i]);
                s += diff * diff;
            }
            return std::sqrt(s);
        };
        double lhs = norm(c.coefficients.drift(t, pa), c.coefficients.drift(t, pb)) +
                     norm(c.coefficients.diffusion(t, pa), c.coefficients.diffusion(t, pb));
        ++report.pairs_checked;
        double bound = kappa(to_double(t)) * dx;
        if (dx > 0) report.worst_ratio = std::max(report.worst_ratio, lhs / (kappa(to_double(t)) * dx));
        if (lhs > bound * (1 + 1e-12) + 1e-300) ++report.violations;
    }
    return report;
}

namespace {

std::string symbols_for(std::size_t branches) {
    if (branches <= 2) return "+-";
    if (branches == 3) return "+0-";
    return "0123456789abcdefghijklmnopqrstuvwxyz";
}

}  // namespace

std::string word_to_string(const Word& word, std::size_t branches) {
    const std::string sym = symbols_for(branches);
    std::string out;
    for (int b : word) {
        if (b < 0 || static_cast<std::size_t>(b) >= sym.size()) {
            throw Error(ErrorCode::NodeNotInTree, "branch index cannot be spelled");
        }
        out.push_back(sym[static_cast<std::size_t>(b)]);
    }
    return out;
}

Word word_from_string(const std::string& text, std::size_t branches) {
    const std::string sym = symbols_for(branches);
    Word w;
    for (char ch : text) {
        auto pos = sym.find(ch);
        if (pos == std::string::npos || pos >= std::max<std::size_t>(branches, 1)) {
            throw Error(ErrorCode::NodeNotInTree, std::string("bad branch symbol '") + ch + "' in word '" + text + "'");
        }
        w.push_back(static_cast<int>(pos));
    }
    return w;
}

}  // namespace cstop
