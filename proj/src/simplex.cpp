#include "cstop/simplex.hpp"

#include "cstop/error.hpp"

#include <optional>

namespace cstop {

namespace {

class Tableau {
public:
    Tableau(const LinearProgram& lp) : lp_(lp) {
        m_ = lp.rows.size();
        n_ = lp.num_vars;
        std::size_t slacks = 0;
        for (const auto& r : lp.rows) {
            if (r.sense == LinearProgram::Sense::LessEqual) ++slacks;
        }
        slack_base_ = n_;
        art_base_ = n_ + slacks;
        cols_ = art_base_ + m_;
        rows_.assign(m_, std::vector<Rational>(cols_ + 1));
        flip_.assign(m_, 1);
        basis_.resize(m_);
        std::size_t next_slack = slack_base_;
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& r = lp.rows[i];
            auto& row = rows_[i];
            for (const auto& [j, a] : r.coeffs) {
                if (j >= n_) throw Error(ErrorCode::InvalidInstance, "LP coefficient index out of range");
                row[j] += a;
            }
            if (r.sense == LinearProgram::Sense::LessEqual) row[next_slack++] = 1;
            row[cols_] = r.rhs;
            if (r.rhs < 0) {
                flip_[i] = -1;
                for (auto& v : row) v = -v;
            }
            row[art_base_ + i] = 1;
            basis_[i] = art_base_ + i;
        }
        reduced_.assign(cols_ + 1, Rational(0));
    }

    LpSolution solve() {
        LpSolution sol;
        // Phase one: maximize -sum(artificials).
        cost_.assign(cols_, Rational(0));
        for (std::size_t i = 0; i < m_; ++i) cost_[art_base_ + i] = -1;
        compute_reduced();
        run(/*allow_artificial=*/false, sol.pivots);
        if (reduced_[cols_] < 0) {
            sol.status = LpStatus::Infeasible;
            sol.farkas.resize(m_);
            for (std::size_t i = 0; i < m_; ++i) {
                Rational y = reduced_[art_base_ + i] - 1;  // d_a = y_i - c_a with c_a = -1
                sol.farkas[i] = flip_[i] * y;
            }
            return sol;
        }
        drive_out_artificials(sol.pivots);

        cost_.assign(cols_, Rational(0));
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.objective[j];
        compute_reduced();
        if (!run(false, sol.pivots)) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.objective = reduced_[cols_];
        sol.x.assign(n_, Rational(0));
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) sol.x[basis_[i]] = rows_[i][cols_];
        }
        sol.duals.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = flip_[i] * reduced_[art_base_ + i];
        return sol;
    }

private:
    void compute_reduced() {
        for (std::size_t j = 0; j <= cols_; ++j) {
            Rational d = 0;
            for (std::size_t i = 0; i < m_; ++i) {
                const Rational& cb = cost_[basis_[i]];
                if (sgn(cb) != 0 && sgn(rows_[i][j]) != 0) d += cb * rows_[i][j];
            }
            if (j < cols_) d -= cost_[j];
            reduced_[j] = d;
        }
    }

    /// Bland's rule iterations; false when unbounded.
    bool run(bool allow_artificial, std::size_t& pivots) {
        for (;;) {
            std::optional<std::size_t> enter;
            const std::size_t limit = allow_artificial ? cols_ : art_base_;
            for (std::size_t j = 0; j < limit; ++j) {
                if (sgn(reduced_[j]) < 0) {
                    enter = j;
                    break;
                }
            }
            if (!enter) return true;
            std::optional<std::size_t> leave;
            Rational best_ratio;
            for (std::size_t i = 0; i < m_; ++i) {
                const Rational& a = rows_[i][*enter];
                if (sgn(a) <= 0) continue;
                Rational ratio = rows_[i][cols_] / a;
                if (!leave || ratio < best_ratio || (ratio == best_ratio && basis_[i] < basis_[*leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (!leave) return false;
            pivot(*leave, *enter);
            ++pivots;
        }
    }

    void drive_out_artificials(std::size_t& pivots) {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < art_base_) continue;
            for (std::size_t j = 0; j < art_base_; ++j) {
                if (sgn(rows_[i][j]) != 0) {
                    pivot(i, j);
                    ++pivots;
                    break;
                }
            }
            // A row with no non-artificial entry is redundant; its artificial stays basic at 0.
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        auto& prow = rows_[r];
        const Rational inv = 1 / prow[c];
        nonzero_.clear();
        for (std::size_t j = 0; j <= cols_; ++j) {
            if (sgn(prow[j]) != 0) {
                prow[j] *= inv;
                nonzero_.push_back(j);
            }
        }
        Rational f;
        auto eliminate = [&](std::vector<Rational>& row) {
            if (sgn(row[c]) == 0) return;
            f = row[c];
            for (std::size_t j : nonzero_) row[j] -= f * prow[j];
        };
        for (std::size_t i = 0; i < m_; ++i) {
            if (i != r) eliminate(rows_[i]);
        }
        eliminate(reduced_);
        basis_[r] = c;
    }

    const LinearProgram& lp_;
    std::size_t m_ = 0, n_ = 0, cols_ = 0, slack_base_ = 0, art_base_ = 0;
    std::vector<std::vector<Rational>> rows_;
    std::vector<int> flip_;
    std::vector<std::size_t> basis_;
    std::vector<Rational> cost_;
    std::vector<Rational> reduced_;
    std::vector<std::size_t> nonzero_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    if (lp.objective.size() != lp.num_vars) throw Error(ErrorCode::InvalidInstance, "objective size mismatch");
    return Tableau(lp).solve();
}

}  // namespace cstop
