#include "cstop/monte_carlo.hpp"

#include "cstop/error.hpp"
#include "cstop/stopping_rules.hpp"

#include <cmath>
#include <random>

namespace cstop {

namespace {

constexpr std::size_t kBlock = 4096;

struct Tables {
    std::vector<double> theta;
    std::vector<std::vector<double>> cumulative;  // per depth, branch CDF
    std::vector<double> value;
    std::vector<std::vector<double>> ineq, eq;  // [constraint][node]
};

struct Sums {
    // slots: value, depth, ineq..., eq...; accumulated relative to the root-stop outcome
    std::vector<double> sum, sq;
    explicit Sums(std::size_t k) : sum(k, 0.0), sq(k, 0.0) {}
};

Tables make_tables(const TreeInstance& tree, const RandomizedStoppingRule& rule) {
    Tables t;
    ThetaProcess theta = theta_of_rule(tree, rule);
    const std::size_t n = tree.size();
    t.theta.resize(n);
    t.value.resize(n);
    t.ineq.assign(tree.num_ineq(), std::vector<double>(n));
    t.eq.assign(tree.num_eq(), std::vector<double>(n));
    for (NodeId id = 0; id < n; ++id) {
        const auto& node = tree.node(id);
        t.theta[id] = to_double(theta.theta[id]);
        t.value[id] = (node.accrued.F + ExtendedReal(node.terminal)).to_double();
        for (std::size_t i = 0; i < tree.num_ineq(); ++i) t.ineq[i][id] = node.accrued.G[i].to_double();
        for (std::size_t i = 0; i < tree.num_eq(); ++i) t.eq[i][id] = node.accrued.H[i].to_double();
    }
    for (int k = 0; k < tree.depth(); ++k) {
        std::vector<double> cdf;
        double acc = 0;
        for (const Branch& b : tree.law_at(k)) {
            acc += to_double(b.prob);
            cdf.push_back(acc);
        }
        cdf.back() = 1.0;
        t.cumulative.push_back(std::move(cdf));
    }
    return t;
}

double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void run_block(const TreeInstance& tree, const Tables& t, std::size_t begin, std::size_t end, std::uint64_t seed,
               std::size_t block, Sums& out) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    std::mt19937_64 rng(seq);
    const std::size_t ni = t.ineq.size();
    for (std::size_t p = begin; p < end; ++p) {
        const double eta = uniform01(rng);
        NodeId v = tree.root();
        while (!(t.theta[v] > eta)) {
            const auto& node = tree.node(v);
            const auto& cdf = t.cumulative[static_cast<std::size_t>(node.depth)];
            const double u = uniform01(rng);
            std::size_t j = 0;
            while (j + 1 < cdf.size() && u >= cdf[j]) ++j;
            v = node.first_child + j;
        }
        auto add = [&](std::size_t slot, double x, double shift) {
            const double d = x - finite_or_zero(shift);
            out.sum[slot] += d;
            out.sq[slot] += d * d;
        };
        const NodeId r = tree.root();
        add(0, t.value[v], t.value[r]);
        add(1, static_cast<double>(tree.node(v).depth), 0.0);
        for (std::size_t i = 0; i < ni; ++i) add(2 + i, t.ineq[i][v], t.ineq[i][r]);
        for (std::size_t i = 0; i < t.eq.size(); ++i) add(2 + ni + i, t.eq[i][v], t.eq[i][r]);
    }
}

McEstimate finish(double sum, double sq, double shift, std::size_t n) {
    McEstimate e;
    const double dn = static_cast<double>(n);
    const double mean_dev = sum / dn;
    e.mean = finite_or_zero(shift) + mean_dev;
    if (n > 1) {
        double var = (sq - dn * mean_dev * mean_dev) / (dn - 1);
        e.std_error = var > 0 ? std::sqrt(var / dn) : 0.0;
    }
    return e;
}

}  // namespace

McResult monte_carlo_value(const TreeInstance& tree, const RandomizedStoppingRule& rule, std::size_t paths,
                           std::uint64_t seed, Execution exec) {
    if (paths == 0) throw Error(ErrorCode::InvalidInstance, "paths must be >= 1");
    const Tables t = make_tables(tree, rule);
    const std::size_t slots = 2 + tree.num_ineq() + tree.num_eq();
    const std::size_t blocks = (paths + kBlock - 1) / kBlock;
    std::vector<Sums> partial(blocks, Sums(slots));

    const auto nb = static_cast<std::ptrdiff_t>(blocks);
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t b = 0; b < nb; ++b) {
            const auto ub = static_cast<std::size_t>(b);
            run_block(tree, t, ub * kBlock, std::min(paths, (ub + 1) * kBlock), seed, ub, partial[ub]);
        }
    } else {
        for (std::size_t b = 0; b < blocks; ++b) {
            run_block(tree, t, b * kBlock, std::min(paths, (b + 1) * kBlock), seed, b, partial[b]);
        }
    }

    Sums total(slots);
    for (const Sums& s : partial) {
        for (std::size_t k = 0; k < slots; ++k) {
            total.sum[k] += s.sum[k];
            total.sq[k] += s.sq[k];
        }
    }
    McResult r;
    r.paths = paths;
    const NodeId root = tree.root();
    r.value = finish(total.sum[0], total.sq[0], t.value[root], paths);
    r.stop_depth = finish(total.sum[1], total.sq[1], 0.0, paths);
    for (std::size_t i = 0; i < tree.num_ineq(); ++i) {
        r.ineq.push_back(finish(total.sum[2 + i], total.sq[2 + i], t.ineq[i][root], paths));
    }
    for (std::size_t i = 0; i < tree.num_eq(); ++i) {
        const std::size_t k = 2 + tree.num_ineq() + i;
        r.eq.push_back(finish(total.sum[k], total.sq[k], t.eq[i][root], paths));
    }
    return r;
}

}  // namespace cstop
