#include "compfw/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace compfw {

void LinearProgram::validate() const {
    const int n = n_vars();
    if (n < 1) throw ConfigError("lp: at least one variable required");
    if (constraints.rows != static_cast<int>(rhs.size()) ||
        constraints.rows != static_cast<int>(sense.size()) ||
        (constraints.rows > 0 && constraints.cols != n))
        throw ConfigError("lp: inconsistent constraint dimensions");
    if (static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n)
        throw ConfigError("lp: bounds must cover every variable");
    for (int j = 0; j < n; ++j)
        if (lower[j] > upper[j]) throw ConfigError("lp: empty variable bound interval");
}

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-10;
constexpr int kMaxPivots = 200000;

// Standard-form image of the user LP: min c.x, A x = b, x >= 0, built by
// shifting finite lower bounds, negating upper-bounded-only columns,
// splitting free variables, and materializing upper bounds as rows.
struct StandardForm {
    Matrix a;          // m x n_std (structural columns only)
    Vector b;
    Vector c;
    double c_const = 0.0;
    std::vector<RowSense> row_sense;  // le rows get slacks, eq rows artificials
    // recovery: x_orig[j] = shift[j] + sign[j] * x_std[pos[j]] (- x_std[neg[j]] if split)
    Vector shift;
    Vector sign;
    std::vector<int> pos;
    std::vector<int> neg;  // -1 unless the variable was split
};

StandardForm build_standard_form(const LinearProgram& lp) {
    const int n = lp.n_vars();
    const int m0 = lp.n_cons();
    StandardForm sf;
    sf.shift.assign(n, 0.0);
    sf.sign.assign(n, 1.0);
    sf.pos.assign(n, -1);
    sf.neg.assign(n, -1);

    int n_std = 0;
    std::vector<double> ub_row_value;  // per std column: finite upper bound row or inf
    for (int j = 0; j < n; ++j) {
        const double lo = lp.lower[j];
        const double hi = lp.upper[j];
        if (std::isfinite(lo)) {
            sf.shift[j] = lo;
            sf.sign[j] = 1.0;
            sf.pos[j] = n_std++;
            ub_row_value.push_back(std::isfinite(hi) ? hi - lo : LinearProgram::plus_inf);
        } else if (std::isfinite(hi)) {
            sf.shift[j] = hi;
            sf.sign[j] = -1.0;
            sf.pos[j] = n_std++;
            ub_row_value.push_back(LinearProgram::plus_inf);
        } else {
            sf.sign[j] = 1.0;
            sf.pos[j] = n_std++;
            sf.neg[j] = n_std++;
            ub_row_value.push_back(LinearProgram::plus_inf);
            ub_row_value.push_back(LinearProgram::plus_inf);
        }
    }

    std::vector<std::pair<int, double>> bound_rows;  // (std column, rhs)
    for (int k = 0; k < n_std; ++k)
        if (std::isfinite(ub_row_value[k])) bound_rows.emplace_back(k, ub_row_value[k]);

    const int m = m0 + static_cast<int>(bound_rows.size());
    sf.a = Matrix(m, n_std);
    sf.b.assign(m, 0.0);
    sf.row_sense.assign(m, RowSense::le);

    for (int i = 0; i < m0; ++i) {
        double bi = lp.rhs[i];
        for (int j = 0; j < n; ++j) {
            const double aij = lp.constraints(i, j);
            bi -= aij * sf.shift[j];
            sf.a(i, sf.pos[j]) += aij * sf.sign[j];
            if (sf.neg[j] >= 0) sf.a(i, sf.neg[j]) -= aij;
        }
        sf.b[i] = bi;
        sf.row_sense[i] = lp.sense[i];
    }
    for (size_t k = 0; k < bound_rows.size(); ++k) {
        const int i = m0 + static_cast<int>(k);
        sf.a(i, bound_rows[k].first) = 1.0;
        sf.b[i] = bound_rows[k].second;
        sf.row_sense[i] = RowSense::le;
    }

    sf.c.assign(n_std, 0.0);
    for (int j = 0; j < n; ++j) {
        sf.c_const += lp.objective[j] * sf.shift[j];
        sf.c[sf.pos[j]] += lp.objective[j] * sf.sign[j];
        if (sf.neg[j] >= 0) sf.c[sf.neg[j]] -= lp.objective[j];
    }
    return sf;
}

struct Tableau {
    int m = 0;
    int n_total = 0;      // structural + slack/surplus + artificial columns
    int n_struct = 0;
    int first_artificial = 0;
    std::vector<double> t;  // m x (n_total + 1), last column is rhs
    std::vector<int> basis;

    double& at(int i, int j) { return t[static_cast<size_t>(i) * (n_total + 1) + j]; }
    double at(int i, int j) const { return t[static_cast<size_t>(i) * (n_total + 1) + j]; }
    double& rhs(int i) { return t[static_cast<size_t>(i) * (n_total + 1) + n_total]; }
    double rhs(int i) const { return t[static_cast<size_t>(i) * (n_total + 1) + n_total]; }

    void pivot(int pr, int pc) {
        const double piv = at(pr, pc);
        const double inv = 1.0 / piv;
        for (int j = 0; j <= n_total; ++j) at(pr, j) *= inv;
        at(pr, pc) = 1.0;
        for (int i = 0; i < m; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (int j = 0; j <= n_total; ++j) at(i, j) -= f * at(pr, j);
            at(i, pc) = 0.0;
        }
        basis[pr] = pc;
    }
};

// Bland's rule simplex on the current tableau for cost vector `cost`
// (length n_total, +inf marks columns barred from entering).
// Returns false when unbounded.
bool simplex_bland(Tableau& tb, const std::vector<double>& cost, int* pivots) {
    while (true) {
        // reduced costs z_j = cost_j - sum_i cost_basis[i] * t[i][j]
        int enter = -1;
        for (int j = 0; j < tb.n_total; ++j) {
            if (!std::isfinite(cost[j])) continue;
            bool basic = false;
            for (int i = 0; i < tb.m; ++i)
                if (tb.basis[i] == j) { basic = true; break; }
            if (basic) continue;
            double z = cost[j];
            for (int i = 0; i < tb.m; ++i) {
                const double cb = cost[tb.basis[i]];
                if (cb != 0.0 && std::isfinite(cb)) z -= cb * tb.at(i, j);
            }
            if (z < -kCostEps) { enter = j; break; }  // lowest index: Bland
        }
        if (enter < 0) return true;  // optimal

        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < tb.m; ++i) {
            const double a = tb.at(i, enter);
            if (a > kPivotEps) {
                const double ratio = tb.rhs(i) / a;
                if (leave < 0 || ratio < best_ratio - 1e-15 ||
                    (std::abs(ratio - best_ratio) <= 1e-15 && tb.basis[i] < tb.basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) return false;  // unbounded direction

        tb.pivot(leave, enter);
        if (++(*pivots) > kMaxPivots)
            throw OracleError("simplex: pivot limit exceeded");
    }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double feas_tol) {
    lp.validate();
    if (!(feas_tol > 0.0)) throw ConfigError("lp: feas_tol must be positive");
    StandardForm sf = build_standard_form(lp);
    const int m = sf.a.rows;
    const int n_struct = sf.a.cols;

    int n_slack = 0, n_art = 0;
    for (int i = 0; i < m; ++i) {
        const bool neg = sf.b[i] < 0.0;
        if (sf.row_sense[i] == RowSense::le && !neg) ++n_slack;
        else if (sf.row_sense[i] == RowSense::le) { ++n_slack; ++n_art; }  // flipped to >=
        else ++n_art;
    }

    Tableau tb;
    tb.m = m;
    tb.n_struct = n_struct;
    tb.n_total = n_struct + n_slack + n_art;
    tb.first_artificial = n_struct + n_slack;
    tb.t.assign(static_cast<size_t>(m) * (tb.n_total + 1), 0.0);
    tb.basis.assign(m, -1);

    int slack_next = n_struct;
    int art_next = tb.first_artificial;
    for (int i = 0; i < m; ++i) {
        double row_scale = sf.b[i] < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n_struct; ++j) tb.at(i, j) = row_scale * sf.a(i, j);
        tb.rhs(i) = row_scale * sf.b[i];
        if (sf.row_sense[i] == RowSense::le) {
            tb.at(i, slack_next) = row_scale;  // slack (or surplus when flipped)
            if (row_scale > 0.0) {
                tb.basis[i] = slack_next;
            } else {
                tb.at(i, art_next) = 1.0;
                tb.basis[i] = art_next++;
            }
            ++slack_next;
        } else {
            tb.at(i, art_next) = 1.0;
            tb.basis[i] = art_next++;
        }
    }

    LpSolution sol;
    int pivots = 0;

    // Phase 1: drive the artificials to zero.
    if (n_art > 0) {
        std::vector<double> cost1(tb.n_total, 0.0);
        for (int j = tb.first_artificial; j < tb.n_total; ++j) cost1[j] = 1.0;
        simplex_bland(tb, cost1, &pivots);  // bounded below by 0, cannot be unbounded
        double phase1 = 0.0;
        for (int i = 0; i < m; ++i)
            if (tb.basis[i] >= tb.first_artificial) phase1 += tb.rhs(i);
        double b_scale = 1.0;
        for (int i = 0; i < m; ++i) b_scale = std::max(b_scale, std::abs(sf.b[i]));
        if (phase1 > feas_tol * b_scale) {
            sol.status = LpStatus::infeasible;
            sol.pivots = pivots;
            return sol;
        }
        // Pivot leftover artificials out where a structural/slack column allows.
        for (int i = 0; i < m; ++i) {
            if (tb.basis[i] < tb.first_artificial) continue;
            int pc = -1;
            for (int j = 0; j < tb.first_artificial; ++j)
                if (std::abs(tb.at(i, j)) > kPivotEps) { pc = j; break; }
            if (pc >= 0) {
                tb.pivot(i, pc);
                ++pivots;
            }
            // else: redundant row; its artificial stays basic at zero and is
            // barred from re-entering in phase 2.
        }
    }

    // Phase 2 on the original objective; artificials may not enter.
    std::vector<double> cost2(tb.n_total, 0.0);
    for (int j = 0; j < n_struct; ++j) cost2[j] = sf.c[j];
    for (int j = tb.first_artificial; j < tb.n_total; ++j)
        cost2[j] = std::numeric_limits<double>::infinity();
    const bool bounded = simplex_bland(tb, cost2, &pivots);
    sol.pivots = pivots;
    if (!bounded) {
        sol.status = LpStatus::unbounded;
        return sol;
    }

    Vector x_std(n_struct, 0.0);
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] < n_struct) x_std[tb.basis[i]] = tb.rhs(i);

    sol.x.assign(lp.n_vars(), 0.0);
    for (int j = 0; j < lp.n_vars(); ++j) {
        double v = sf.shift[j] + sf.sign[j] * x_std[sf.pos[j]];
        if (sf.neg[j] >= 0) v -= x_std[sf.neg[j]];
        sol.x[j] = v;
    }
    sol.objective_value = dot(lp.objective, sol.x);
    sol.status = LpStatus::optimal;

    // Dual certificate: solve B^T y = c_B on the final basis columns of the
    // standard form (slack columns are +/- unit vectors with zero cost).
    {
        Matrix bt(m, m);
        Vector cb(m, 0.0);
        // Reconstruct initial column for each basis index.
        slack_next = n_struct;
        std::vector<Vector> init_cols(tb.n_total, Vector(m, 0.0));
        for (int j = 0; j < n_struct; ++j)
            for (int i = 0; i < m; ++i)
                init_cols[j][i] = (sf.b[i] < 0.0 ? -1.0 : 1.0) * sf.a(i, j);
        int sn = n_struct, an = tb.first_artificial;
        for (int i = 0; i < m; ++i) {
            const double row_scale = sf.b[i] < 0.0 ? -1.0 : 1.0;
            if (sf.row_sense[i] == RowSense::le) {
                init_cols[sn][i] = row_scale;
                if (row_scale < 0.0) init_cols[an++][i] = 1.0;
                ++sn;
            } else {
                init_cols[an++][i] = 1.0;
            }
        }
        for (int i = 0; i < m; ++i) {
            const int bj = tb.basis[i];
            cb[i] = bj < n_struct ? sf.c[bj] : 0.0;
            for (int k = 0; k < m; ++k) bt(i, k) = init_cols[bj][k];  // row i = column basis[i]
        }
        // Gaussian elimination with partial pivoting on bt y = cb.
        Vector y = cb;
        std::vector<int> perm(m);
        Matrix g = bt;
        for (int i = 0; i < m; ++i) perm[i] = i;
        bool singular = false;
        for (int col = 0; col < m && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < m; ++r)
                if (std::abs(g(r, col)) > std::abs(g(piv, col))) piv = r;
            if (std::abs(g(piv, col)) < 1e-13) { singular = true; break; }
            if (piv != col) {
                for (int j = 0; j < m; ++j) std::swap(g.data[piv * m + j], g.data[col * m + j]);
                std::swap(y[piv], y[col]);
            }
            for (int r = col + 1; r < m; ++r) {
                const double f = g(r, col) / g(col, col);
                if (f == 0.0) continue;
                for (int j = col; j < m; ++j) g(r, j) -= f * g(col, j);
                y[r] -= f * y[col];
            }
        }
        if (!singular) {
            for (int col = m - 1; col >= 0; --col) {
                for (int r = col + 1; r < m; ++r) y[col] -= g(col, r) * y[r];
                y[col] /= g(col, col);
            }
            double dual = sf.c_const;
            for (int i = 0; i < m; ++i) dual += y[i] * (sf.b[i] < 0.0 ? -sf.b[i] : sf.b[i]);
            sol.dual_objective = dual;
        } else {
            sol.dual_objective = sol.objective_value;  // degenerate basis; fall back
        }
    }
    return sol;
}

}  // namespace compfw
