#pragma once

#include "compfw/lp.hpp"
#include "compfw/numerics.hpp"
#include "compfw/problems.hpp"

// Generalized linear minimization oracles: argmin over the domain of
// F(z + V (x - y), x) for the tracked affine surrogate, plus the classical
// domain LMOs they reduce to. All ties are broken deterministically (lowest
// index) so runs are reproducible.

namespace compfw {

struct AffineSurrogate {
    Vector z;        // dim n
    Matrix v;        // n x d
    Vector anchor;   // dim d

    Vector eval(const Vector& x) const { return z + v.apply(x - anchor); }
};

struct GlmoResult {
    Vector x_star;
    double surrogate_value = 0.0;      // F evaluated on the surrogate at x_star
    int inner_iterations = 0;          // 0 for exact LP solves
};

struct GlmoParams {
    int inner_budget = 200;
    double smoothing_mu = 1e-3;
    double feas_tol = 1e-9;
};

// argmin <g, x> over the l1 ball: -tau * sign(g_i*) e_i* with i* the lowest
// index attaining max |g_i|; the zero vector when g = 0.
Vector lmo_l1_ball(const Vector& g, double tau);

// argmin <G, X> over the nuclear ball: -tau u v^T from the top singular pair.
Matrix lmo_nuclear_ball(const Matrix& g, double tau, double tol = 1e-10);

// min_t { t : surrogate_i(x) <= t, ||x||_1 <= tau } as an LP with x = x+ - x-.
GlmoResult glmo_max_affine(const AffineSurrogate& s, const DomainSpec& domain,
                           double feas_tol = 1e-9);

// min over (x in simplex, y0 in [lo, hi]) of y0 + hinge average, LP with one
// auxiliary variable per rectified unit.
GlmoResult glmo_cvar(const AffineSurrogate& s, const DomainSpec& domain, double alpha,
                     double feas_tol = 1e-9);

// Inexact oracle for the l1-mean outer over the nuclear ball: Frank-Wolfe on
// the Huber-smoothed surrogate, returning the best iterate by the true
// piecewise-affine value. Starts from the anchor so the exact-surrogate gap
// stays nonnegative.
GlmoResult glmo_l1_nuclear(const AffineSurrogate& s, const DomainSpec& domain,
                           int inner_budget = 200, double smoothing_mu = 1e-3);

// Single-component surrogate plus a simple regularizer: the classical
// composite Frank-Wolfe oracle.
GlmoResult glmo_composite(const AffineSurrogate& s, const DomainSpec& domain,
                          RegularizerKind reg = RegularizerKind::zero, double lambda = 0.0);

// Dispatch on (outer kind, domain kind).
GlmoResult glmo_solve(const OuterFunction& outer, const DomainSpec& domain,
                      const AffineSurrogate& s, const GlmoParams& params);

}  // namespace compfw
