#pragma once

#include <utility>
#include <vector>

#include "compfw/glmo.hpp"
#include "compfw/problems.hpp"

// Generalized Frank-Wolfe gap, curvature probing, explicit theory-constant
// calculators, and log-log rate fitting.

namespace compfw {

// phi(y) - min_x F(f(y) + grad f(y) (x - y), x), evaluated through the exact
// oracle and the matching generalized LMO. The inexact (nuclear) oracle runs
// with five times the solver's inner budget and the inexactness is bounded
// below by construction (the inner method starts at y).
double generalized_fw_gap(const ProblemInstance& problem, const Vector& y,
                          const GlmoParams& params = GlmoParams{});

// Monte Carlo lower estimate of the composite curvature: max over sampled
// (x, y, gamma) of (2 / gamma^2) [F(f(y_gamma), y_gamma) -
// F(f(x) + gamma grad f(x)(y - x), y_gamma)]. Samples mix domain vertices and
// interior points 50/50.
double curvature_probe(const ProblemInstance& problem, int num_pairs,
                       const std::vector<double>& gamma_grid, RngState& rng);

struct TheoryConstants {
    double l_f = 0.0;
    double l = 0.0;
    double g = 0.0;
    double d_x = 0.0;
    int n = 0;
    double sigma_f = 0.0;
    double sigma_g = 0.0;
    double r = 2.0;
    double c_r = 1.0;
    double s_bound = 0.0;  // L_F L D^2 sqrt(n)
    // first-moment tracking constants
    double u_g = 0.0;
    double u_f_variant1 = 0.0;
    double u_f_variant2 = 0.0;
    double e_g0 = 0.0;
    double e_f0 = 0.0;
    double e_f0_taylor = 0.0;
    // decreasing-schedule tracking constants (diagnostics)
    double q_g = 0.0;
    double q_f = 0.0;
    // rate prefactors
    double m_variant1 = 0.0;
    double m_variant2 = 0.0;
    double a_convex = 0.0;
};

// Evaluates every boxed constant of the analysis; the initialization moments
// are estimated by Monte Carlo at the domain's default start point.
TheoryConstants compute_theory_constants(const ProblemInstance& problem, double phi0, double r,
                                         int init_moment_draws, RngState& rng);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  // (log K, log min-gap)
    int excluded = 0;                               // nonpositive gaps dropped
};

// Least-squares line on (ln K, ln min_gap); the slope is the empirical rate
// exponent. Requires at least three usable points.
RateFit fit_rate(const std::vector<std::pair<double, double>>& k_and_min_gap);

}  // namespace compfw
