#pragma once

#include <vector>

namespace abd {

/// Small dense linear program:
///   maximize c'x  subject to  Aeq x = beq,  Ale x <= ble,  lo <= x <= hi.
/// Intended scale is tens of variables and constraints.
struct LpProblem {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> eq_lhs;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> le_lhs;
    std::vector<double> le_rhs;
    std::vector<double> lo;
    std::vector<double> hi;  // entries may be +inf

    void validate() const;
};

enum class LpStatus { Optimal, Infeasible };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    /// Largest constraint residual of the returned point (Optimal), or the
    /// infeasibility gap (Infeasible).
    double max_violation = 0.0;
    /// Row of the maximally violated constraint when infeasible: equality
    /// rows first, then inequality rows. -1 when optimal.
    int worst_constraint = -1;
};

/// Two-phase bounded-variable primal simplex with Bland's rule.
/// Throws NumericError if the objective is unbounded (cannot happen when all
/// variables carry finite bounds).
LpSolution solve_lp(const LpProblem& problem);

}  // namespace abd
