#pragma once

#include "cstop/lp_oracle.hpp"
#include "cstop/measure.hpp"
#include "cstop/tree.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cstop {

/// An intermediate stopping time given by its cut: a node set of depth >= 1
/// that every root-to-leaf path meets exactly once.
struct Cut {
    std::vector<NodeId> nodes;  // sorted
};

Cut cut_at_depth(const TreeInstance& tree, int k);
/// Errors: InvalidInstance when the node set is not a valid cut.
Cut make_cut(const TreeInstance& tree, std::vector<NodeId> nodes);
/// First node of depth >= 1 on each path where measure_to_rule(m) has 0 < q < 1;
/// the depth-N node when a path never randomizes.
Cut first_randomization_cut(const TreeInstance& tree, const StoppingMeasure& m);

struct Survivor {
    NodeId node = 0;
    Rational mass;                  // r = s + u at the cut node
    std::vector<ExtendedReal> ybar;  // conditional remaining inequality accruals
    std::vector<ExtendedReal> zbar;  // conditional remaining equality accruals
};

struct ConditionalBudgets {
    std::vector<Survivor> survivors;     // r > 0, cut order
    std::vector<NodeId> zero_survival;   // cut nodes with r = 0
    std::vector<NodeId> stopped_before;  // pre-cut nodes with s > 0
};

struct Conditioned {
    ConditionalBudgets budgets;
    /// Per survivor, the rescaled descendant law in subtree(node) numbering.
    std::vector<StoppingMeasure> sub_measures;
};

/// Errors: ShapeMismatch when m is not a valid measure on the tree.
Conditioned condition(const TreeInstance& tree, const StoppingMeasure& m, const Cut& cut);

/// Prefix of `prefix` strictly before the cut; below each survivor the
/// subtree measure scaled by the survivor's mass. Cut nodes with zero mass
/// get zero mass below them. Errors: ShapeMismatch.
StoppingMeasure paste(const TreeInstance& tree, const StoppingMeasure& prefix, const Cut& cut,
                      const std::vector<NodeId>& survivors, const std::vector<StoppingMeasure>& sub_measures);

struct DppNodeReport {
    NodeId node = 0;
    std::string word;
    Rational mass;
    std::vector<ExtendedReal> ybar, zbar;
    Rational conditional_value;  // value of P* conditioned at the node
    Rational sub_value;          // subtree LP at (ybar, zbar)
};

struct DppReport {
    Rational lhs;
    Rational rhs_sub;    // bracket at P*
    Rational rhs_super;  // max bracket over tested P, each certified by a feasible pasting
    Rational gap;        // max(|rhs_sub - lhs|, |rhs_super - lhs|)
    bool sub_ok = false;
    bool super_ok = false;
    bool pass = false;
    std::size_t candidates = 0;
    std::size_t zero_survival = 0;
    std::vector<DppNodeReport> per_node;  // for P*
};

struct DppOptions {
    /// Extra feasible vertices (random objectives) tested besides P*.
    std::size_t random_candidates = 3;
    std::uint64_t seed = 1;
};

/// Errors: InvalidInstance (optimum not finite / infeasible), SubproblemInfeasible.
DppReport verify_dpp(const TreeInstance& tree, const BudgetVector& budgets, const Cut& cut,
                     const DppOptions& options = {});

}  // namespace cstop
