#pragma once

#include "cstop/measure.hpp"
#include "cstop/tree.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cstop {

enum class Execution { Serial, Parallel };

struct McEstimate {
    double mean = 0;
    double std_error = 0;
};

struct McResult {
    std::size_t paths = 0;
    McEstimate value;  // F + pi at the stopping node
    std::vector<McEstimate> ineq;
    std::vector<McEstimate> eq;
    McEstimate stop_depth;
};

/// Paths are simulated in fixed blocks, each with its own generator seeded
/// from (seed, block index), and block sums are merged in block order. Serial
/// and parallel execution therefore return bit-identical results.
McResult monte_carlo_value(const TreeInstance& tree, const RandomizedStoppingRule& rule, std::size_t paths,
                           std::uint64_t seed, Execution exec = Execution::Serial);

}  // namespace cstop
