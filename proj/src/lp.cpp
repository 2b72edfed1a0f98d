#include "abd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abd/errors.hpp"
#include "abd/stats.hpp"

namespace abd {

void LpProblem::validate() const {
    if (num_vars <= 0) throw ValidationError("lp: num_vars must be positive");
    auto expect_len = [&](size_t got, size_t want, const char* what) {
        if (got != want)
            throw ValidationError(std::string("lp: dimension mismatch in ") + what);
    };
    expect_len(objective.size(), num_vars, "objective");
    expect_len(lo.size(), num_vars, "lower bounds");
    expect_len(hi.size(), num_vars, "upper bounds");
    expect_len(eq_lhs.size(), eq_rhs.size(), "equality rows");
    expect_len(le_lhs.size(), le_rhs.size(), "inequality rows");
    for (const auto& row : eq_lhs) expect_len(row.size(), num_vars, "equality row");
    for (const auto& row : le_lhs) expect_len(row.size(), num_vars, "inequality row");
    for (int j = 0; j < num_vars; ++j) {
        if (std::isnan(lo[j]) || std::isnan(hi[j]) || lo[j] == kInf || hi[j] == -kInf)
            throw ValidationError("lp: malformed bound");
        if (!(lo[j] <= hi[j])) throw ValidationError("lp: lo <= hi required");
        if (lo[j] == -kInf) throw ValidationError("lp: free variables not supported");
    }
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;

// Dense tableau simplex over variables with [lo, hi] bounds. Nonbasic
// variables rest at one of their bounds; entering steps may terminate in a
// bound flip instead of a pivot. Bland's smallest-index rule throughout.
struct Tableau {
    int rows;
    int cols;
    std::vector<std::vector<double>> tab;  // B^{-1} A
    std::vector<double> xb;                // values of basic variables
    std::vector<int> basis;                // variable index per row
    std::vector<int> row_of;               // -1 if nonbasic
    std::vector<char> at_upper;            // nonbasic side
    std::vector<double> lo, hi;

    double value_of(int j) const {
        if (row_of[j] >= 0) return xb[row_of[j]];
        return at_upper[j] ? hi[j] : lo[j];
    }

    // Maximizes cost'x. Returns false if unbounded.
    bool iterate(const std::vector<double>& cost) {
        for (;;) {
            // reduced costs via y = c_B B^{-1} applied through the tableau
            int enter = -1;
            int dir = 0;
            for (int j = 0; j < cols; ++j) {
                if (row_of[j] >= 0) continue;
                if (lo[j] == hi[j]) continue;
                double d = cost[j];
                for (int i = 0; i < rows; ++i) {
                    const double cb = cost[basis[i]];
                    if (cb != 0.0) d -= cb * tab[i][j];
                }
                if (!at_upper[j] && d > kCostTol) { enter = j; dir = +1; break; }
                if (at_upper[j] && d < -kCostTol) { enter = j; dir = -1; break; }
            }
            if (enter < 0) return true;

            // ratio test: how far can the entering variable move
            double t_max = hi[enter] - lo[enter];  // own bound flip distance
            int leave_row = -1;
            char leave_to_upper = 0;
            for (int i = 0; i < rows; ++i) {
                const double w = dir * tab[i][enter];
                const int bi = basis[i];
                double t_i = kInf;
                char to_upper = 0;
                if (w > kPivotTol) {
                    t_i = (xb[i] - lo[bi]) / w;
                    to_upper = 0;
                } else if (w < -kPivotTol) {
                    if (hi[bi] == kInf) continue;
                    t_i = (hi[bi] - xb[i]) / (-w);
                    to_upper = 1;
                } else {
                    continue;
                }
                if (t_i < -1e-12) t_i = 0.0;
                const bool better = t_i < t_max - 1e-12;
                const bool tie = std::fabs(t_i - t_max) <= 1e-12;
                if (better || (tie && (leave_row < 0 || bi < basis[leave_row]))) {
                    t_max = std::min(t_max, std::max(t_i, 0.0));
                    leave_row = i;
                    leave_to_upper = to_upper;
                }
            }
            if (t_max == kInf) return false;  // unbounded direction

            // move and update basic values
            for (int i = 0; i < rows; ++i) xb[i] -= dir * t_max * tab[i][enter];
            if (leave_row < 0) {
                // bound flip only
                at_upper[enter] = at_upper[enter] ? 0 : 1;
                continue;
            }
            const int leave = basis[leave_row];
            const double enter_val = (at_upper[enter] ? hi[enter] : lo[enter]) + dir * t_max;
            pivot(leave_row, enter);
            row_of[leave] = -1;
            at_upper[leave] = leave_to_upper;
            basis[leave_row] = enter;
            row_of[enter] = leave_row;
            xb[leave_row] = enter_val;
        }
    }

    void pivot(int r, int j) {
        const double piv = tab[r][j];
        auto& prow = tab[r];
        const double inv = 1.0 / piv;
        for (int q = 0; q < cols; ++q) prow[q] *= inv;
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            const double f = tab[i][j];
            if (f == 0.0) continue;
            auto& irow = tab[i];
            for (int q = 0; q < cols; ++q) irow[q] -= f * prow[q];
            irow[j] = 0.0;
        }
        prow[j] = 1.0;
    }
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
    problem.validate();
    const int n = problem.num_vars;
    const int m_eq = static_cast<int>(problem.eq_lhs.size());
    const int m_le = static_cast<int>(problem.le_lhs.size());
    const int m = m_eq + m_le;
    const int n_slack = m_le;
    const int n_art = m;
    const int cols = n + n_slack + n_art;

    Tableau t;
    t.rows = m;
    t.cols = cols;
    t.lo.assign(cols, 0.0);
    t.hi.assign(cols, kInf);
    for (int j = 0; j < n; ++j) {
        t.lo[j] = problem.lo[j];
        t.hi[j] = problem.hi[j];
    }
    t.at_upper.assign(cols, 0);
    t.row_of.assign(cols, -1);
    t.basis.resize(m);
    t.xb.assign(m, 0.0);
    t.tab.assign(m, std::vector<double>(cols, 0.0));

    std::vector<double> rhs(m, 0.0);
    for (int i = 0; i < m_eq; ++i) {
        for (int j = 0; j < n; ++j) t.tab[i][j] = problem.eq_lhs[i][j];
        rhs[i] = problem.eq_rhs[i];
    }
    for (int i = 0; i < m_le; ++i) {
        const int row = m_eq + i;
        for (int j = 0; j < n; ++j) t.tab[row][j] = problem.le_lhs[i][j];
        t.tab[row][n + i] = 1.0;  // slack
        rhs[row] = problem.le_rhs[i];
    }

    // nonbasic start at lower bounds; artificials absorb the residual
    std::vector<double> residual = rhs;
    for (int j = 0; j < n; ++j) {
        if (t.lo[j] == 0.0) continue;
        for (int i = 0; i < m; ++i) residual[i] -= t.tab[i][j] * t.lo[j];
    }
    for (int i = 0; i < m; ++i) {
        const int art = n + n_slack + i;
        const double sign = (residual[i] >= 0.0) ? 1.0 : -1.0;
        t.tab[i][art] = sign;
        t.basis[i] = art;
        t.row_of[art] = i;
        if (sign < 0.0) {
            for (int q = 0; q < cols; ++q) t.tab[i][q] = -t.tab[i][q];
        }
        t.xb[i] = std::fabs(residual[i]);
    }

    // phase 1: drive artificials to zero
    std::vector<double> cost1(cols, 0.0);
    for (int i = 0; i < m; ++i) cost1[n + n_slack + i] = -1.0;
    if (!t.iterate(cost1)) throw NumericError("lp: phase-1 unbounded (internal error)");

    double infeas = 0.0;
    int worst_art_row = -1;
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] >= n + n_slack && t.xb[i] > infeas) {
            infeas = t.xb[i];
            worst_art_row = i;
        }
    }
    if (infeas > 1e-9) {
        LpSolution sol;
        sol.status = LpStatus::Infeasible;
        sol.max_violation = infeas;
        sol.worst_constraint = worst_art_row;
        return sol;
    }

    // lock artificials at zero for phase 2
    for (int i = 0; i < m; ++i) {
        const int art = n + n_slack + i;
        t.hi[art] = 0.0;
    }

    std::vector<double> cost2(cols, 0.0);
    for (int j = 0; j < n; ++j) cost2[j] = problem.objective[j];
    if (!t.iterate(cost2))
        throw NumericError("lp: objective unbounded over the feasible region");

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x.resize(n);
    for (int j = 0; j < n; ++j) sol.x[j] = t.value_of(j);
    sol.objective = 0.0;
    for (int j = 0; j < n; ++j) sol.objective += problem.objective[j] * sol.x[j];

    double viol = 0.0;
    for (int i = 0; i < m_eq; ++i) {
        double v = -problem.eq_rhs[i];
        for (int j = 0; j < n; ++j) v += problem.eq_lhs[i][j] * sol.x[j];
        viol = std::max(viol, std::fabs(v));
    }
    for (int i = 0; i < m_le; ++i) {
        double v = -problem.le_rhs[i];
        for (int j = 0; j < n; ++j) v += problem.le_lhs[i][j] * sol.x[j];
        viol = std::max(viol, v);
    }
    for (int j = 0; j < n; ++j) {
        viol = std::max(viol, problem.lo[j] - sol.x[j]);
        if (problem.hi[j] != kInf) viol = std::max(viol, sol.x[j] - problem.hi[j]);
    }
    sol.max_violation = viol;
    return sol;
}

}  // namespace abd
