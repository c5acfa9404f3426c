#include "compfw/glmo.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace compfw {

Vector lmo_l1_ball(const Vector& g, double tau) {
    if (!(tau > 0.0)) throw ConfigError("lmo_l1_ball: tau must be positive");
    const int d = static_cast<int>(g.size());
    int best = -1;
    double best_abs = 0.0;
    for (int i = 0; i < d; ++i) {
        const double a = std::abs(g[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    Vector x(d, 0.0);
    if (best >= 0) x[best] = g[best] > 0.0 ? -tau : tau;
    return x;
}

Matrix lmo_nuclear_ball(const Matrix& g, double tau, double tol) {
    if (!(tau > 0.0)) throw ConfigError("lmo_nuclear_ball: tau must be positive");
    Matrix x(g.rows, g.cols);
    if (g.frobenius_norm() == 0.0) return x;
    const SingularPair p = top_singular_pair(g, tol);
    for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) x(i, j) = -tau * p.u[i] * p.v[j];
    return x;
}

GlmoResult glmo_max_affine(const AffineSurrogate& s, const DomainSpec& domain, double feas_tol) {
    if (domain.kind != DomainKind::l1_ball)
        throw ConfigError("glmo_max_affine: expected an l1-ball domain");
    const int n = static_cast<int>(s.z.size());
    const int d = domain.dim;
    assert(s.v.rows == n && s.v.cols == d);

    // variables: x+ (d), x- (d), t
    LinearProgram lp;
    const int nv = 2 * d + 1;
    lp.objective.assign(nv, 0.0);
    lp.objective[2 * d] = 1.0;
    lp.constraints = Matrix(n + 1, nv);
    lp.rhs.assign(n + 1, 0.0);
    lp.sense.assign(n + 1, RowSense::le);
    for (int i = 0; i < n; ++i) {
        double rhs = -s.z[i];
        for (int j = 0; j < d; ++j) {
            const double vij = s.v(i, j);
            lp.constraints(i, j) = vij;
            lp.constraints(i, d + j) = -vij;
            rhs += vij * s.anchor[j];
        }
        lp.constraints(i, 2 * d) = -1.0;
        lp.rhs[i] = rhs;
    }
    for (int j = 0; j < 2 * d; ++j) lp.constraints(n, j) = 1.0;
    lp.rhs[n] = domain.tau;
    lp.lower.assign(nv, 0.0);
    lp.upper.assign(nv, LinearProgram::plus_inf);
    lp.lower[2 * d] = LinearProgram::minus_inf;

    const LpSolution sol = solve_lp(lp, feas_tol);
    if (sol.status != LpStatus::optimal)
        throw OracleError("glmo_max_affine: LP solver returned non-optimal status");

    GlmoResult out;
    out.x_star.assign(d, 0.0);
    for (int j = 0; j < d; ++j) out.x_star[j] = sol.x[j] - sol.x[d + j];
    out.surrogate_value = outer_eval(OuterFunction::max_of(n), s.eval(out.x_star), out.x_star);
    return out;
}

GlmoResult glmo_cvar(const AffineSurrogate& s, const DomainSpec& domain, double alpha,
                     double feas_tol) {
    if (domain.kind != DomainKind::simplex_cross_interval)
        throw ConfigError("glmo_cvar: expected a simplex-cross-interval domain");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("glmo_cvar: alpha must lie in (0, 1)");
    const int n = static_cast<int>(s.z.size());
    const int d = domain.dim;        // simplex coords + y0
    const int ds = d - 1;
    assert(s.v.rows == n && s.v.cols == d);

    // variables: x (ds), y0, w (n)
    LinearProgram lp;
    const int nv = ds + 1 + n;
    lp.objective.assign(nv, 0.0);
    lp.objective[ds] = 1.0;
    const double hinge_w = 1.0 / ((1.0 - alpha) * n);
    for (int t = 0; t < n; ++t) lp.objective[ds + 1 + t] = hinge_w;

    lp.constraints = Matrix(1 + n, nv);
    lp.rhs.assign(1 + n, 0.0);
    lp.sense.assign(1 + n, RowSense::le);
    for (int j = 0; j < ds; ++j) lp.constraints(0, j) = 1.0;
    lp.rhs[0] = 1.0;
    lp.sense[0] = RowSense::eq;
    for (int t = 0; t < n; ++t) {
        double rhs = -s.z[t];
        for (int j = 0; j < d; ++j) rhs += s.v(t, j) * s.anchor[j];
        for (int j = 0; j < ds; ++j) lp.constraints(1 + t, j) = s.v(t, j);
        lp.constraints(1 + t, ds) = s.v(t, ds);
        lp.constraints(1 + t, ds + 1 + t) = -1.0;
        lp.rhs[1 + t] = rhs;
    }
    lp.lower.assign(nv, 0.0);
    lp.upper.assign(nv, LinearProgram::plus_inf);
    lp.lower[ds] = domain.lo;
    lp.upper[ds] = domain.hi;

    const LpSolution sol = solve_lp(lp, feas_tol);
    if (sol.status != LpStatus::optimal)
        throw OracleError("glmo_cvar: LP solver returned non-optimal status");

    GlmoResult out;
    out.x_star.assign(d, 0.0);
    for (int j = 0; j < d; ++j) out.x_star[j] = sol.x[j];
    out.surrogate_value =
        outer_eval(OuterFunction::cvar_portfolio(n, alpha), s.eval(out.x_star), out.x_star);
    return out;
}

namespace {

double l1_mean_value(const Vector& u) {
    double acc = 0.0;
    for (double ui : u) acc += std::abs(ui);
    return acc / static_cast<double>(u.size());
}

}  // namespace

GlmoResult glmo_l1_nuclear(const AffineSurrogate& s, const DomainSpec& domain, int inner_budget,
                           double smoothing_mu) {
    if (domain.kind != DomainKind::nuclear_ball)
        throw ConfigError("glmo_l1_nuclear: expected a nuclear-ball domain");
    if (inner_budget < 1 || !(smoothing_mu > 0.0))
        throw ConfigError("glmo_l1_nuclear: need inner_budget >= 1 and smoothing_mu > 0");
    const int n = static_cast<int>(s.z.size());
    const int d = domain.dim;
    assert(s.v.rows == n && s.v.cols == d);

    Vector x = domain.contains(s.anchor) ? s.anchor : domain.default_point();
    Vector best_x = x;
    double best_val = l1_mean_value(s.eval(x));

    // exact minimum of the piecewise-affine value along [x, step]: kinks sit
    // where a surrogate component crosses zero
    const auto track_segment_best = [&](const Vector& from, const Vector& to) {
        const Vector u_from = s.eval(from);
        const Vector u_to = s.eval(to);
        const auto consider = [&](double eta) {
            double val = 0.0;
            for (int i = 0; i < n; ++i)
                val += std::abs((1.0 - eta) * u_from[i] + eta * u_to[i]);
            val /= n;
            if (val < best_val) {
                best_val = val;
                best_x = from;
                for (int j = 0; j < d; ++j) best_x[j] = (1.0 - eta) * from[j] + eta * to[j];
            }
        };
        consider(1.0);
        for (int i = 0; i < n; ++i) {
            const double denom = u_to[i] - u_from[i];
            if (denom == 0.0) continue;
            const double eta = -u_from[i] / denom;
            if (eta > 0.0 && eta < 1.0) consider(eta);
        }
    };

    std::vector<Vector> atoms;
    for (int t = 0; t < inner_budget; ++t) {
        // gradient of the Huber-smoothed surrogate mean
        const Vector u = s.eval(x);
        Vector grad(d, 0.0);
        for (int i = 0; i < n; ++i) {
            const double psi = std::clamp(u[i] / smoothing_mu, -1.0, 1.0) / n;
            if (psi == 0.0) continue;
            const double* row = s.v.data.data() + static_cast<size_t>(i) * d;
            for (int j = 0; j < d; ++j) grad[j] += psi * row[j];
        }
        Matrix g(domain.mat_rows, domain.mat_cols);
        g.data = grad;
        const Matrix step = lmo_nuclear_ball(g, domain.tau, 1e-8);
        track_segment_best(x, step.data);
        if (atoms.size() < 64) atoms.push_back(step.data);
        const double eta = 2.0 / (t + 2.0);
        for (int j = 0; j < d; ++j) x[j] = (1.0 - eta) * x[j] + eta * step.data[j];
    }

    // polish the returned point over the atoms already paid for: repeated
    // exact line minimization from the incumbent toward each extreme point
    for (int sweep = 0; sweep < 4; ++sweep) {
        const Vector incumbent = best_x;
        for (const Vector& atom : atoms) track_segment_best(incumbent, atom);
        if (best_x == incumbent) break;
    }

    GlmoResult out;
    out.x_star = best_x;
    out.surrogate_value = best_val;
    out.inner_iterations = inner_budget;
    return out;
}

GlmoResult glmo_composite(const AffineSurrogate& s, const DomainSpec& domain,
                          RegularizerKind reg, double lambda) {
    if (s.z.size() != 1) throw ConfigError("glmo_composite: surrogate must have one component");
    const int d = domain.dim;
    const Vector g = s.v.row(0);
    GlmoResult out;

    if (reg == RegularizerKind::zero) {
        switch (domain.kind) {
            case DomainKind::l1_ball:
                out.x_star = lmo_l1_ball(g, domain.tau);
                break;
            case DomainKind::box: {
                out.x_star.assign(d, 0.0);
                for (int j = 0; j < d; ++j) out.x_star[j] = g[j] > 0.0 ? domain.lo : (g[j] < 0.0 ? domain.hi : domain.lo);
                break;
            }
            case DomainKind::simplex_cross_interval: {
                out.x_star.assign(d, 0.0);
                int best = 0;
                for (int j = 1; j + 1 < d; ++j)
                    if (g[j] < g[best]) best = j;
                out.x_star[best] = 1.0;
                out.x_star[d - 1] = g[d - 1] > 0.0 ? domain.lo : (g[d - 1] < 0.0 ? domain.hi : domain.lo);
                break;
            }
            case DomainKind::nuclear_ball: {
                Matrix gm(domain.mat_rows, domain.mat_cols);
                gm.data = g;
                out.x_star = lmo_nuclear_ball(gm, domain.tau).data;
                break;
            }
        }
    } else if (reg == RegularizerKind::l1_penalty && domain.kind == DomainKind::box) {
        // coordinatewise piecewise-linear minimum; candidates are the box
        // edges and the kink at zero, preferring the kink on ties
        out.x_star.assign(d, 0.0);
        for (int j = 0; j < d; ++j) {
            Vector cand;
            if (domain.lo <= 0.0 && domain.hi >= 0.0) cand.push_back(0.0);
            cand.push_back(domain.lo);
            cand.push_back(domain.hi);
            double best_v = std::numeric_limits<double>::infinity();
            double best_x = 0.0;
            for (double c : cand) {
                const double v = g[j] * c + lambda * std::abs(c);
                if (v < best_v - 1e-15) {
                    best_v = v;
                    best_x = c;
                }
            }
            out.x_star[j] = best_x;
        }
    } else {
        throw ConfigError("glmo_composite: unsupported (domain, regularizer) pair");
    }

    OuterFunction f = OuterFunction::composite(reg, lambda);
    out.surrogate_value = outer_eval(f, s.eval(out.x_star), out.x_star);
    return out;
}

GlmoResult glmo_solve(const OuterFunction& outer, const DomainSpec& domain,
                      const AffineSurrogate& s, const GlmoParams& params) {
    switch (outer.kind) {
        case OuterKind::linear_first_component:
            return glmo_composite(s, domain, RegularizerKind::zero, 0.0);
        case OuterKind::additive_composite:
            return glmo_composite(s, domain, outer.reg_kind, outer.reg_lambda);
        case OuterKind::max_of_components:
            return glmo_max_affine(s, domain, params.feas_tol);
        case OuterKind::cvar:
            return glmo_cvar(s, domain, outer.alpha, params.feas_tol);
        case OuterKind::l1_norm_mean:
            return glmo_l1_nuclear(s, domain, params.inner_budget, params.smoothing_mu);
    }
    throw ConfigError("glmo_solve: no oracle for this outer/domain pair");
}

}  // namespace compfw
