#pragma once

#include <limits>
#include <vector>

#include "compfw/numerics.hpp"

// Small dense linear programs backing the LP-reducible generalized LMOs.
// Two-phase tableau simplex with Bland's rule: deterministic and cycle-free,
// which is what the oracles need (argmin sets can be faces, and reproducible
// runs require a canonical representative).

namespace compfw {

enum class RowSense { le, eq };

struct LinearProgram {
    Vector objective;              // length n_vars, minimized
    Matrix constraints;            // n_cons x n_vars
    Vector rhs;                    // length n_cons
    std::vector<RowSense> sense;   // per row
    Vector lower;                  // per variable, -inf allowed
    Vector upper;                  // per variable, +inf allowed

    static constexpr double minus_inf = -std::numeric_limits<double>::infinity();
    static constexpr double plus_inf = std::numeric_limits<double>::infinity();

    int n_vars() const { return static_cast<int>(objective.size()); }
    int n_cons() const { return constraints.rows; }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Vector x;
    double objective_value = 0.0;
    // Objective of the dual certificate recovered from the final basis;
    // equals objective_value at an optimum up to round-off.
    double dual_objective = 0.0;
    int pivots = 0;
};

LpSolution solve_lp(const LinearProgram& lp, double feas_tol = 1e-9);

}  // namespace compfw
