#include "compfw/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace compfw {

double generalized_fw_gap(const ProblemInstance& problem, const Vector& y,
                          const GlmoParams& params) {
    if (!problem.inner.has_exact())
        throw ConfigError("generalized_fw_gap: exact oracle required");
    const InnerSample exact = problem.inner.exact(y);
    AffineSurrogate s{exact.f, exact.jac, y};
    GlmoParams gap_params = params;
    gap_params.inner_budget = params.inner_budget * 5;
    const GlmoResult res = glmo_solve(problem.outer, problem.domain, s, gap_params);
    const double phi = outer_eval(problem.outer, exact.f, y);
    return phi - res.surrogate_value;
}

double curvature_probe(const ProblemInstance& problem, int num_pairs,
                       const std::vector<double>& gamma_grid, RngState& rng) {
    if (!problem.inner.has_exact()) throw ConfigError("curvature_probe: exact oracle required");
    double estimate = 0.0;
    for (int t = 0; t < num_pairs; ++t) {
        const Vector x =
            rng.coin() ? problem.domain.random_vertex(rng) : problem.domain.random_interior(rng);
        const Vector y =
            rng.coin() ? problem.domain.random_vertex(rng) : problem.domain.random_interior(rng);
        const InnerSample at_x = problem.inner.exact(x);
        const Vector jac_dir = at_x.jac.apply(y - x);
        for (double gamma : gamma_grid) {
            if (!(gamma > 0.0 && gamma <= 1.0)) continue;
            const Vector y_gamma = axpy(x, gamma, y - x);
            const double lhs = problem.objective_exact(y_gamma);
            const Vector linearized = axpy(at_x.f, gamma, jac_dir);
            const double rhs = outer_eval(problem.outer, linearized, y_gamma);
            const double diff = lhs - rhs;
            // the 2/gamma^2 amplification would otherwise blow up round-off
            if (std::abs(diff) <= 1e-13 * (1.0 + std::abs(lhs) + std::abs(rhs))) continue;
            estimate = std::max(estimate, 2.0 * diff / (gamma * gamma));
        }
    }
    return estimate;
}

TheoryConstants compute_theory_constants(const ProblemInstance& problem, double phi0, double r,
                                         int init_moment_draws, RngState& rng) {
    if (!(r > 1.0 && r <= 2.0)) throw ConfigError("theory constants: r must lie in (1, 2]");
    const InnerConstants& ic = problem.inner.constants;
    if (!ic.G)
        throw ConfigError("theory constants: G missing (the Polyak function tracker needs it)");

    TheoryConstants tc;
    tc.l_f = problem.outer.lipschitz_LF;
    tc.l = ic.L;
    tc.g = *ic.G;
    tc.d_x = problem.domain.diameter;
    tc.n = problem.inner.dim_u;
    tc.sigma_f = ic.sigma_f;
    tc.sigma_g = ic.sigma_g;
    tc.r = r;
    tc.c_r = vbe_constant(r);
    const double root_n = std::sqrt(static_cast<double>(tc.n));
    tc.s_bound = tc.l_f * tc.l * tc.d_x * tc.d_x * root_n;

    const double pow3 = std::pow(3.0, (r - 1.0) / r);
    const double pow4 = std::pow(4.0, (r - 1.0) / r);
    const double cr_root = std::pow(tc.c_r, 1.0 / r);
    tc.u_g = pow3 * std::max(tc.l * tc.d_x, cr_root * tc.sigma_g);
    tc.u_f_variant1 = pow3 * std::max(tc.g * tc.d_x, cr_root * tc.sigma_f);
    tc.u_f_variant2 =
        pow4 * std::max({tc.l * tc.d_x * tc.d_x / 2.0, tc.u_g * tc.d_x, cr_root * tc.sigma_f});

    // Initialization moments at the default start, by Monte Carlo.
    double moment_g = 0.0, moment_f = 0.0;
    if (problem.inner.has_exact() && init_moment_draws > 0) {
        const Vector y0 = problem.domain.default_point();
        const InnerSample exact = problem.inner.exact(y0);
        for (int t = 0; t < init_moment_draws; ++t) {
            const InnerSample s = problem.inner.query(y0, rng);
            moment_g += std::pow((s.jac - exact.jac).frobenius_norm(), r);
            moment_f += std::pow(norm2(s.f - exact.f), r);
        }
        moment_g /= init_moment_draws;
        moment_f /= init_moment_draws;
    }
    tc.e_g0 = pow3 * std::pow(moment_g, 1.0 / r);
    tc.e_f0 = pow3 * std::pow(moment_f, 1.0 / r);
    tc.e_f0_taylor = pow4 * std::pow(moment_f, 1.0 / r);

    tc.m_variant1 = phi0 + 0.5 * tc.s_bound + 2.0 * tc.l_f * (tc.e_f0 + 2.0 * tc.u_f_variant1) +
                    2.0 * tc.l_f * tc.d_x * (tc.e_g0 + 2.0 * tc.u_g);
    tc.m_variant2 = phi0 + 0.5 * tc.s_bound +
                    2.0 * tc.l_f * (tc.e_f0_taylor + (3.0 + tc.e_g0) * tc.u_f_variant2) +
                    2.0 * tc.l_f * tc.d_x * (tc.e_g0 + 2.0 * tc.u_g);

    // Decreasing-schedule constants feeding the convex prefactor.
    const double y = r / (2.0 * r - 1.0);
    const double q = y * (r - 1.0);
    const double k0 = std::ceil(std::pow(4.0 * q, 1.0 / (1.0 - y))) + 2.0;
    const double pow2r = std::pow(2.0, r - 1.0);
    const double pow4r = std::pow(4.0, r);
    const double m_g = pow2r * pow4r * std::pow(tc.l * tc.d_x, r) + tc.c_r * std::pow(tc.sigma_g, r);
    const double qbar_g = std::max(std::pow(k0, q) * moment_g, 2.0 * m_g);
    const double q_g = std::pow(qbar_g, 1.0 / r);
    const double m_f = std::pow(4.0, r - 1.0) *
                       (pow4r * std::pow(tc.l, r) * std::pow(tc.d_x, 2.0 * r) / std::pow(2.0, r) +
                        pow4r * std::pow(tc.d_x, r) * qbar_g + tc.c_r * std::pow(tc.sigma_f, r));
    const double qbar_f = std::max(std::pow(k0, q) * moment_f, 2.0 * m_f);
    const double q_f = std::pow(qbar_f, 1.0 / r);
    tc.q_g = q_g;
    tc.q_f = q_f;
    const double p = (r - 1.0) / (2.0 * r - 1.0);
    const double b = 2.0 * tc.s_bound + 4.0 * tc.l_f * (q_f + tc.d_x * q_g) * std::pow(2.0, p);
    tc.a_convex = std::max(std::pow(2.0, p) * phi0, b / (2.0 - p));
    return tc;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& k_and_min_gap) {
    RateFit fit;
    for (const auto& [k, gap] : k_and_min_gap) {
        if (!(gap > 0.0) || !(k > 0.0)) {
            ++fit.excluded;
            continue;
        }
        fit.points.emplace_back(std::log(k), std::log(gap));
    }
    if (fit.points.size() < 3)
        throw ConfigError("fit_rate: need at least three positive (K, min_gap) points");

    const double n = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0.0) throw ConfigError("fit_rate: need at least two distinct K values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (const auto& [x, y] : fit.points) {
        const double e = y - (fit.intercept + fit.slope * x);
        ss_res += e * e;
    }
    fit.r_squared = syy > 1e-300 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace compfw
