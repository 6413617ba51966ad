#pragma once

#include "cstop/measure.hpp"
#include "cstop/rational.hpp"
#include "cstop/tree.hpp"

#include <string>
#include <vector>

namespace cstop {

/// theta[v] = 1 - prod over the root path up to and including v of (1 - q):
/// the conditional probability of having stopped by depth(v) given the word of v.
struct ThetaProcess {
    std::vector<Rational> theta;
    friend bool operator==(const ThetaProcess&, const ThetaProcess&) = default;
};

/// Errors: RuleShapeMismatch.
ThetaProcess theta_of_rule(const TreeInstance& tree, const RandomizedStoppingRule& rule);

/// Throws EquivalenceViolation unless theta lies in [0, 1], is non-decreasing
/// along every word and equals 1 at depth N.
void validate_theta(const TreeInstance& tree, const ThetaProcess& theta);

/// Stopping node on the root path of `leaf`: the first ancestor with theta > eta.
NodeId hitting_node(const TreeInstance& tree, const ThetaProcess& theta, NodeId leaf, const Rational& eta);

/// One stopping node per leaf, in tree.leaves() order.
std::vector<NodeId> derandomize(const TreeInstance& tree, const ThetaProcess& theta, const Rational& eta);

/// s(v) = pathprob(v) * prod_{strict prefixes}(1 - q) * q(v), u(v) likewise with 1 - q(v).
StoppingMeasure rule_to_measure(const TreeInstance& tree, const RandomizedStoppingRule& rule);

/// Law of the stopping node when eta ~ U[0, 1), computed by evaluating
/// hitting_node once per breakpoint interval of every leaf's theta path.
StoppingMeasure integrate_threshold(const TreeInstance& tree, const ThetaProcess& theta);

struct EquivalenceReport {
    bool pass = false;
    StoppingMeasure via_rule;
    StoppingMeasure via_threshold;
    MeasureAudit audit_rule;
    MeasureAudit audit_threshold;
};

/// Compares rule_to_measure with integrate_threshold(theta_of_rule) and the
/// resulting expectations. Errors: RuleShapeMismatch, EquivalenceViolation.
EquivalenceReport equivalence_check(const TreeInstance& tree, const RandomizedStoppingRule& rule);

/// Same, with an externally supplied theta in place of theta_of_rule.
EquivalenceReport equivalence_check(const TreeInstance& tree, const RandomizedStoppingRule& rule,
                                    const ThetaProcess& theta);

}  // namespace cstop
