#pragma once

#include "cstop/expression.hpp"
#include "cstop/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cstop {

using NodeId = std::size_t;
/// Branch indices from the root, one per step.
using Word = std::vector<int>;

struct Branch {
    Rational prob;
    std::vector<Rational> increment;  // dimension d
};
using BranchLaw = std::vector<Branch>;

/// Drift b(t, path) in R^l and diffusion sigma(t, path) in R^{l x d} (row-major).
struct Coefficients {
    std::function<State(const Rational& t, const Path& path)> drift;
    std::function<std::vector<Rational>(const Rational& t, const Path& path)> diffusion;
};

using Functional = std::function<ExtendedReal(const Rational& t, const Path& path)>;

Functional make_functional(Expression e);

struct InequalityConstraint {
    Functional g;
    ExtendedReal bound = ExtendedReal::pos_inf();  // y in (-inf, +inf]
};

struct EqualityConstraint {
    Functional h;
    ExtendedReal target = 0;  // z in [-inf, +inf]
};

struct ConstraintSpec {
    std::vector<InequalityConstraint> ineq;
    std::vector<EqualityConstraint> eq;
};

/// Constraint bounds (y, z), dimensioned to a ConstraintSpec.
struct BudgetVector {
    std::vector<ExtendedReal> y;
    std::vector<ExtendedReal> z;

    friend bool operator==(const BudgetVector&, const BudgetVector&) = default;
};

/// Everything needed to build a TreeInstance.
struct TreeConfig {
    Rational t0 = 0;
    Rational dt = 1;
    int depth = 0;
    std::size_t noise_dim = 1;  // d
    std::size_t state_dim = 1;  // l
    /// One law for every step, or one per step (size == depth).
    std::vector<BranchLaw> branching;
    /// State path on [0, t0]; back() is x(t0). Non-empty.
    Path history;
    /// Brownian path on [0, t0]; never enters any functional.
    Path brownian_history;
    Coefficients coefficients;
    Functional reward;    // f
    Functional terminal;  // pi
    ConstraintSpec constraints;
};

struct NodeFunctionals {
    ExtendedReal F;
    std::vector<ExtendedReal> G;
    std::vector<ExtendedReal> H;
};

/// A depth-N increment tree carrying the Euler chain and every path functional.
///
/// Nodes are numbered breadth-first, so the children of a node are contiguous
/// and all depth-N leaves come last. Immutable after construction.
class TreeInstance {
public:
    struct Node {
        std::optional<NodeId> parent;
        int branch = -1;  // index into the parent's branch law
        int depth = 0;
        NodeId first_child = 0;
        std::size_t num_children = 0;
        Rational path_prob = 1;
        State brownian;  // W^t at this node, starting from 0
        State state;     // X at this node
        Rational time;
        ExtendedReal reward_rate;    // f(t_k, X_{0..k})
        Rational terminal;           // pi(t_k, X_{0..k})
        std::vector<ExtendedReal> ineq_rate;  // g_i(t_k, X_{0..k})
        std::vector<ExtendedReal> eq_rate;    // h_i(t_k, X_{0..k})
        NodeFunctionals accrued;     // left-endpoint sums up to reaching this node
    };

    explicit TreeInstance(TreeConfig config);

    const TreeConfig& config() const { return config_; }
    const Rational& t0() const { return config_.t0; }
    const Rational& dt() const { return config_.dt; }
    int depth() const { return config_.depth; }
    std::size_t noise_dim() const { return config_.noise_dim; }
    std::size_t state_dim() const { return config_.state_dim; }
    std::size_t num_ineq() const { return config_.constraints.ineq.size(); }
    std::size_t num_eq() const { return config_.constraints.eq.size(); }

    std::size_t size() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    std::span<const Node> nodes() const { return nodes_; }
    NodeId root() const { return 0; }
    std::span<const NodeId> leaves() const { return leaves_; }
    std::vector<NodeId> nodes_at_depth(int k) const;
    std::vector<NodeId> children(NodeId id) const;
    const BranchLaw& law_at(int depth) const;
    bool is_leaf(NodeId id) const { return nodes_[id].depth == config_.depth; }
    /// Largest branch count over all steps; used for word spelling.
    std::size_t max_branches() const;

    /// Throws NodeNotInTree for words that are too long or use bad branch indices.
    NodeId find(const Word& word) const;
    Word word_of(NodeId id) const;
    /// history + the Euler states along the node's word.
    Path path_to(NodeId id) const;
    /// True when `ancestor` lies on the root path of `id` (including id itself).
    bool is_ancestor(NodeId ancestor, NodeId id) const;
    NodeId ancestor_at(NodeId id, int depth) const;

    /// Sub-instance rooted at `id`: start time t_id, history path_to(id),
    /// depth N - depth(id), same functionals and constraints.
    TreeInstance subtree(NodeId id) const;
    /// Maps the sub-instance's node ids back to this tree.
    std::vector<NodeId> subtree_embedding(NodeId id) const;

    /// Default budgets: the bounds declared in the constraint spec.
    BudgetVector declared_budgets() const;

private:
    TreeConfig config_;
    std::vector<Node> nodes_;
    std::vector<NodeId> leaves_;
};

/// Validates the configuration and builds the tree.
/// Errors: InvalidBranching, InvalidHorizon, InvalidInstance.
TreeInstance build_tree(TreeConfig config);

/// One Euler step X + b*dt + sigma*w from the given path.
State euler_step(const TreeConfig& config, const Rational& t, const Path& path, std::span<const Rational> increment);

/// Recomputes the state path for `word` from scratch. Errors: WordTooLong, NodeNotInTree.
Path euler_state(const TreeInstance& tree, const Word& word);

/// F, G_i, H_i accrued up to reaching the node named by `word`. Errors: NodeNotInTree.
NodeFunctionals cumulative_functionals(const TreeInstance& tree, const Word& word);

struct LipschitzReport {
    std::size_t pairs_checked = 0;
    std::size_t violations = 0;
    double worst_ratio = 0;  // max (|db| + |dsigma|) / (kappa(t) * |dx|_sup)
};

/// Samples pairs of equal-depth nodes and tests the Lipschitz bound on (b, sigma).
/// Violations are reported, not thrown.
LipschitzReport check_lipschitz(const TreeInstance& tree, const std::function<double(double)>& kappa,
                                std::size_t pairs, std::uint64_t seed);

/// Word <-> text. Two-branch laws use "+-", three-branch "+0-", larger ones digits.
std::string word_to_string(const Word& word, std::size_t branches);
Word word_from_string(const std::string& text, std::size_t branches);

}  // namespace cstop
