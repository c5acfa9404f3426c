#include <doctest.h>

#include <cmath>

#include "compfw/metrics.hpp"
#include "compfw/solver.hpp"
#include "test_support.hpp"

using namespace compfw;

namespace {

// scalar identity inner map over a box: f(x) = x
ProblemInstance identity_over_box() {
    ProblemInstance prob;
    prob.name = "identity_box";
    prob.outer = OuterFunction::linear_first();
    prob.domain = DomainSpec::box(1, -1.0, 1.0);
    prob.inner.dim_x = 1;
    prob.inner.dim_u = 1;
    prob.inner.exact = [](const Vector& x) {
        InnerSample s;
        s.f = {x[0]};
        s.jac = Matrix(1, 1);
        s.jac(0, 0) = 1.0;
        return s;
    };
    prob.inner.query = [exact = prob.inner.exact](const Vector& x, RngState&) { return exact(x); };
    prob.inner.constants.L = 0.0;
    prob.inner.constants.G = 1.0;
    return prob;
}

ProblemInstance scalar_square_over_box() {
    ProblemInstance prob = identity_over_box();
    prob.name = "square_box";
    prob.inner.exact = [](const Vector& x) {
        InnerSample s;
        s.f = {x[0] * x[0]};
        s.jac = Matrix(1, 1);
        s.jac(0, 0) = 2.0 * x[0];
        return s;
    };
    prob.inner.query = [exact = prob.inner.exact](const Vector& x, RngState&) { return exact(x); };
    prob.inner.constants.L = 2.0;
    prob.inner.constants.G = 2.0;
    return prob;
}

}  // namespace

TEST_CASE("generalized gap reduces to the classical gap for a linear outer") {
    const ProblemInstance prob = identity_over_box();
    CHECK(generalized_fw_gap(prob, {0.5}) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(generalized_fw_gap(prob, {-1.0}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gap vanishes at an interior stationary point") {
    // single convex quadratic with its unconstrained minimizer inside the ball
    ProblemInstance prob;
    prob.outer = OuterFunction::linear_first();
    prob.domain = DomainSpec::l1_ball(3, 2.0);
    prob.inner.dim_x = 3;
    prob.inner.dim_u = 1;
    const Vector b{0.2, -0.1, 0.3};
    prob.inner.exact = [b](const Vector& x) {
        InnerSample s;
        s.f = {0.5 * dot(x, x) + dot(b, x)};
        s.jac = Matrix(1, 3);
        for (int j = 0; j < 3; ++j) s.jac(0, j) = x[j] + b[j];
        return s;
    };
    prob.inner.query = [exact = prob.inner.exact](const Vector& x, RngState&) { return exact(x); };
    const Vector minimizer{-0.2, 0.1, -0.3};
    CHECK(generalized_fw_gap(prob, minimizer) <= 1e-6);
    CHECK(generalized_fw_gap(prob, minimizer) >= -1e-12);
}

TEST_CASE("gap dominates primal suboptimality on a convex task") {
    MinimaxRegressionParams p;
    p.groups = 3;
    p.dim = 5;
    p.tau = 1.0;
    p.samples_per_group = 25;
    RngState prng(31);
    const ProblemInstance prob = make_minimax_regression(p, prng);

    SolverConfig ref;
    ref.variant = SolverVariant::deterministic_basic;
    ref.schedule = Schedule::deterministic_convex();
    ref.iterations = 20000;
    const RunRecord rec = run(prob, ref);
    double phi_star = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : rec.rows) phi_star = std::min(phi_star, row.objective);

    RngState rng(5);
    for (int t = 0; t < 5; ++t) {
        const Vector y = prob.domain.random_interior(rng);
        const double gap = generalized_fw_gap(prob, y);
        CHECK(gap >= prob.objective_exact(y) - phi_star - 1e-8);
    }
}

TEST_CASE("curvature probe on linear and quadratic maps") {
    RngState rng(7);
    std::vector<double> gammas;
    for (int e = 0; e <= 10; ++e) gammas.push_back(std::pow(0.5, e));

    // affine inner map: no curvature
    MatrixCompletionParams mc;
    mc.rows = 4;
    mc.cols = 3;
    mc.rank = 2;
    mc.density = 0.6;
    mc.tau = 2.0;
    RngState prng(17);
    const ProblemInstance linear_prob = make_matrix_completion(mc, prng);
    CHECK(curvature_probe(linear_prob, 100, gammas, rng) <= 1e-10);

    // scalar square over [-1, 1]: the defining supremum equals 8
    const ProblemInstance square = scalar_square_over_box();
    const double probe = curvature_probe(square, 400, gammas, rng);
    CHECK(probe <= 8.0 + 1e-9);
    CHECK(probe >= 7.0);
}

TEST_CASE("theory constants") {
    ProblemInstance prob = identity_over_box();
    prob.outer.lipschitz_LF = 1.0;
    prob.inner.constants.L = 2.0;
    prob.inner.constants.G = 1.0;
    prob.inner.dim_u = 4;
    prob.domain.diameter = 2.0;
    RngState rng(1);
    const TheoryConstants tc = compute_theory_constants(prob, 1.0, 2.0, 100, rng);
    CHECK(tc.s_bound == doctest::Approx(16.0));  // 1 * 2 * 4 * sqrt(4)
    CHECK(tc.c_r == 1.0);
    // deterministic oracle: initialization moments vanish, U terms collapse
    CHECK(tc.e_g0 == 0.0);
    CHECK(tc.e_f0 == 0.0);
    CHECK(tc.u_g == doctest::Approx(std::sqrt(3.0) * 2.0 * 2.0));

    // prefactors are monotone in the noise and diameter inputs
    auto with = [&](double sf, double sg, double d) {
        ProblemInstance q = prob;
        q.inner.constants.sigma_f = sf;
        q.inner.constants.sigma_g = sg;
        q.domain.diameter = d;
        RngState r(1);
        return compute_theory_constants(q, 1.0, 2.0, 0, r);
    };
    double last1 = 0.0, last2 = 0.0;
    for (double sf : {0.0, 0.5, 1.0, 2.0}) {
        const TheoryConstants t = with(sf, 0.3, 2.0);
        CHECK(t.m_variant1 >= last1);
        CHECK(t.m_variant2 >= last2);
        last1 = t.m_variant1;
        last2 = t.m_variant2;
    }
    last1 = last2 = 0.0;
    for (double sg : {0.0, 0.5, 1.0, 2.0}) {
        const TheoryConstants t = with(0.3, sg, 2.0);
        CHECK(t.m_variant1 >= last1);
        CHECK(t.m_variant2 >= last2);
        last1 = t.m_variant1;
        last2 = t.m_variant2;
    }
    last1 = last2 = 0.0;
    for (double d : {0.5, 1.0, 2.0, 4.0}) {
        const TheoryConstants t = with(0.3, 0.3, d);
        CHECK(t.m_variant1 >= last1);
        CHECK(t.m_variant2 >= last2);
        last1 = t.m_variant1;
        last2 = t.m_variant2;
    }

    ProblemInstance no_g = prob;
    no_g.inner.constants.G.reset();
    RngState r2(1);
    CHECK_THROWS_AS(compute_theory_constants(no_g, 1.0, 2.0, 10, r2), ConfigError);
}

TEST_CASE("rate fitting on exact power laws") {
    std::vector<std::pair<double, double>> pts;
    for (double k : {64.0, 128.0, 256.0, 512.0, 1024.0}) pts.emplace_back(k, std::pow(k, -0.25));
    RateFit fit = fit_rate(pts);
    CHECK(fit.slope == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    pts.clear();
    for (double k : {10.0, 100.0, 1000.0}) pts.emplace_back(k, 0.37);
    fit = fit_rate(pts);
    CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));

    pts.clear();
    for (double k : {8.0, 64.0, 512.0, 4096.0}) pts.emplace_back(k, 3.0 * std::pow(k, -1.0 / 3.0));
    fit = fit_rate(pts);
    CHECK(fit.slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    // nonpositive gaps are excluded; too few points is an error
    pts = {{10.0, 0.1}, {20.0, -0.5}, {40.0, 0.0}, {80.0, 0.05}};
    CHECK_THROWS_AS(fit_rate(pts), ConfigError);
    pts = {{10.0, 0.1}, {20.0, -0.5}, {40.0, 0.08}, {80.0, 0.05}};
    fit = fit_rate(pts);
    CHECK(fit.excluded == 1);
    CHECK(fit.points.size() == 3);
}
