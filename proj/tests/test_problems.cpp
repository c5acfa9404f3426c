#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "compfw/problems.hpp"
#include "test_support.hpp"

using namespace compfw;

namespace {

// componentwise z-test of a Monte Carlo mean against a target
void check_unbiased(const ProblemInstance& problem, int draws, RngState& rng) {
    for (int point = 0; point < 5; ++point) {
        const Vector x = problem.domain.random_interior(rng);
        const InnerSample exact = problem.inner.exact(x);
        const int n = problem.inner.dim_u, d = problem.inner.dim_x;
        Vector f_mean(n, 0.0), f_sq(n, 0.0);
        Matrix j_mean(n, d), j_sq(n, d);
        for (int t = 0; t < draws; ++t) {
            const InnerSample s = problem.inner.query(x, rng);
            for (int i = 0; i < n; ++i) {
                f_mean[i] += s.f[i] / draws;
                f_sq[i] += s.f[i] * s.f[i] / draws;
            }
            for (size_t idx = 0; idx < j_mean.data.size(); ++idx) {
                j_mean.data[idx] += s.jac.data[idx] / draws;
                j_sq.data[idx] += s.jac.data[idx] * s.jac.data[idx] / draws;
            }
        }
        for (int i = 0; i < n; ++i) {
            const double se =
                std::sqrt(std::max(0.0, f_sq[i] - f_mean[i] * f_mean[i]) / draws) + 1e-12;
            CHECK(std::abs(f_mean[i] - exact.f[i]) <= 3.0 * se);
        }
        for (size_t idx = 0; idx < j_mean.data.size(); ++idx) {
            const double se =
                std::sqrt(std::max(0.0, j_sq.data[idx] - j_mean.data[idx] * j_mean.data[idx]) /
                          draws) +
                1e-12;
            CHECK(std::abs(j_mean.data[idx] - exact.jac.data[idx]) <= 3.0 * se);
        }
    }
}

void check_jacobian_fd(const ProblemInstance& problem, RngState& rng) {
    const int n = problem.inner.dim_u, d = problem.inner.dim_x;
    for (int point = 0; point < 5; ++point) {
        const Vector x = problem.domain.random_interior(rng);
        const Matrix jac = problem.inner.exact(x).jac;
        const double scale = 1.0 + jac.frobenius_norm();
        for (int j = 0; j < d; ++j) {
            const double h = 1e-5 * (1.0 + std::abs(x[j]));
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Vector fp = problem.inner.exact(xp).f;
            const Vector fm = problem.inner.exact(xm).f;
            for (int i = 0; i < n; ++i) {
                const double fd = (fp[i] - fm[i]) / (2.0 * h);
                CHECK(std::abs(jac(i, j) - fd) <= 1e-5 * scale);
            }
        }
    }
}

}  // namespace

TEST_CASE("outer function point evaluations") {
    const Vector x0(3, 0.0);
    CHECK(outer_eval(OuterFunction::max_of(3), {1.0, 3.0, 2.0}, x0) == 3.0);
    CHECK(outer_eval(OuterFunction::l1_mean(3), {1.0, -1.0, 2.0}, x0) ==
          doctest::Approx(4.0 / 3.0));
    const Vector with_y0{0.5, 0.5, 0.0};  // y0 channel zero
    CHECK(outer_eval(OuterFunction::cvar_portfolio(4, 0.5), {0.0, 0.0, 0.0, 0.0}, with_y0) == 0.0);
    CHECK(outer_eval(OuterFunction::linear_first(), {7.0}, x0) == 7.0);
    OuterFunction comp = OuterFunction::composite(RegularizerKind::l1_penalty, 0.5);
    CHECK(outer_eval(comp, {2.0}, {1.0, -1.0, 0.0}) == doctest::Approx(3.0));
}

TEST_CASE("cvar closed form via sorting") {
    CHECK(cvar_closed_form({0.0, 0.0, 0.0, 0.0}, 0.5) == doctest::Approx(0.0));
    // single loss: minimum at t = loss, value = loss
    CHECK(cvar_closed_form({2.5}, 0.9) == doctest::Approx(2.5));
    // reference by a fine grid
    RngState rng(3);
    for (int t = 0; t < 20; ++t) {
        Vector losses(6);
        for (double& v : losses) v = rng.normal();
        const double alpha = 0.3 + 0.6 * rng.uniform();
        const double w = 1.0 / ((1.0 - alpha) * losses.size());
        double best = std::numeric_limits<double>::infinity();
        for (double tau = -5.0; tau <= 5.0; tau += 1e-4) {
            double acc = 0.0;
            for (double l : losses) acc += std::max(0.0, l - tau);
            best = std::min(best, tau + w * acc);
        }
        const double closed = cvar_closed_form(losses, alpha);
        CHECK(closed <= best + 1e-12);            // the exact optimum beats any grid point
        CHECK(best - closed <= (w * losses.size() + 1.0) * 1e-4);  // grid covering error
    }
}

TEST_CASE("outer functions are monotone, subhomogeneous and Lipschitz") {
    RngState rng(5);
    struct Case {
        OuterFunction f;
        bool nonneg_only;   // norms are monotone on the nonnegative orthant
        bool y0_nonneg;     // the cvar scalar channel must be >= 0 for subhomogeneity
        double true_lf;
    };
    const int n = 4;
    std::vector<Case> cases;
    cases.push_back({OuterFunction::max_of(n), false, false, 1.0});
    cases.push_back({OuterFunction::cvar_portfolio(n, 0.8), false, true,
                     1.0 / ((1.0 - 0.8) * std::sqrt(static_cast<double>(n)))});
    cases.push_back({OuterFunction::l1_mean(n), true, false, 1.0 / std::sqrt(static_cast<double>(n))});
    cases.push_back({OuterFunction::linear_first(), false, false, 1.0});

    for (const Case& c : cases) {
        const int arity = c.f.arity;
        for (int t = 0; t < 500; ++t) {
            Vector x(arity + 1, 0.0);
            for (double& v : x) v = rng.uniform();  // keeps the y0 channel nonnegative
            if (!c.y0_nonneg) x.back() = 2.0 * rng.uniform() - 1.0;

            Vector u1(arity), bump(arity);
            for (int i = 0; i < arity; ++i) {
                u1[i] = c.nonneg_only ? rng.uniform() : rng.normal();
                bump[i] = rng.uniform();
            }
            const Vector u2 = u1 + bump;
            CHECK(outer_eval(c.f, u1, x) <= outer_eval(c.f, u2, x) + 1e-12);

            const double gamma = 1.0 + 3.0 * rng.uniform();
            CHECK(outer_eval(c.f, gamma * u1, x) <= gamma * outer_eval(c.f, u1, x) + 1e-12);

            Vector v(arity);
            for (int i = 0; i < arity; ++i) v[i] = c.nonneg_only ? rng.uniform() : rng.normal();
            const double diff = std::abs(outer_eval(c.f, u1, x) - outer_eval(c.f, v, x));
            CHECK(diff <= c.true_lf * norm2(u1 - v) + 1e-12);
        }
    }
}

TEST_CASE("domain diameters and membership") {
    CHECK(DomainSpec::l1_ball(4, 2.5).diameter == doctest::Approx(5.0));
    CHECK(DomainSpec::simplex_cross_interval(50, -1.0, 1.0).diameter ==
          doctest::Approx(std::sqrt(6.0)));
    CHECK(DomainSpec::nuclear_ball(3, 5, 2.0).diameter == doctest::Approx(4.0));
    CHECK(DomainSpec::box(9, -1.0, 1.0).diameter == doctest::Approx(6.0));

    RngState rng(8);
    for (DomainSpec domain :
         {DomainSpec::l1_ball(4, 2.0), DomainSpec::simplex_cross_interval(3, -1.0, 1.0),
          DomainSpec::box(3, -0.5, 2.0)}) {
        CHECK(domain.contains(domain.default_point(), 1e-12));
        for (int t = 0; t < 50; ++t) {
            CHECK(domain.contains(domain.random_vertex(rng), 1e-9));
            CHECK(domain.contains(domain.random_interior(rng), 1e-9));
        }
    }
    // nuclear ball membership needs the full SVD
    const DomainSpec nuc = DomainSpec::nuclear_ball(4, 3, 1.5);
    for (int t = 0; t < 30; ++t) {
        const Vector x = rng.coin() ? nuc.random_vertex(rng) : nuc.random_interior(rng);
        Matrix m(4, 3);
        m.data = x;
        CHECK(test_support::nuclear_norm(m) <= 1.5 + 1e-8);
    }
}

TEST_CASE("minimax regression construction and oracles") {
    MinimaxRegressionParams p;
    p.groups = 10;
    p.dim = 100;
    p.tau = 5.0;
    p.samples_per_group = 30;
    RngState rng(1);
    const ProblemInstance prob = make_minimax_regression(p, rng);
    CHECK(prob.inner.dim_u == 10);
    CHECK(prob.inner.dim_x == 100);
    CHECK(prob.domain.diameter == doctest::Approx(10.0));
    CHECK(prob.outer.lipschitz_LF == 1.0);
    CHECK(prob.inner.constants.L > 0.0);
    CHECK(prob.inner.constants.G.has_value());

    MinimaxRegressionParams small;
    small.groups = 3;
    small.dim = 2;
    small.tau = 1.0;
    small.samples_per_group = 50;
    small.noise = NoiseSpec::gaussian(0.3);
    RngState rng2(3);
    const ProblemInstance sp = make_minimax_regression(small, rng2);
    check_unbiased(sp, 10000, rng2);
    check_jacobian_fd(sp, rng2);

    // noise=none queries return the exact oracle bit-exactly
    MinimaxRegressionParams exact_p = small;
    exact_p.noise = NoiseSpec::none();
    RngState rng3(3);
    const ProblemInstance ep = make_minimax_regression(exact_p, rng3);
    const Vector x = ep.domain.random_interior(rng3);
    const InnerSample q = ep.inner.query(x, rng3);
    const InnerSample e = ep.inner.exact(x);
    CHECK(q.f == e.f);
    CHECK(q.jac.data == e.jac.data);
}

TEST_CASE("duplicated groups collapse the minimax to least squares") {
    RngState rng(9);
    const int rows = 8, d = 3;
    Matrix features(2 * rows, d);
    Vector labels(2 * rows, 0.0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < d; ++j) {
            const double v = rng.normal();
            features(2 * i, j) = v;
            features(2 * i + 1, j) = v;
        }
        const double label = rng.normal();
        labels[2 * i] = label;
        labels[2 * i + 1] = label;
    }
    const ProblemInstance prob =
        make_minimax_from_data(features, labels, 2, 1.0, NoiseSpec::none(), rng);
    for (int t = 0; t < 10; ++t) {
        const Vector x = prob.domain.random_interior(rng);
        const InnerSample s = prob.inner.exact(x);
        CHECK(s.f[0] == doctest::Approx(s.f[1]).epsilon(1e-12));
        // the max over identical groups is the single least-squares value
        CHECK(prob.objective_exact(x) == doctest::Approx(s.f[0]));
    }
}

TEST_CASE("cvar portfolio task") {
    CvarPortfolioParams p;
    p.assets = 50;
    p.alpha = 0.95;
    p.scenarios = 100;
    RngState rng(2);
    const ProblemInstance prob = make_cvar_portfolio(p, rng);
    CHECK(prob.inner.dim_x == 51);
    CHECK(prob.inner.dim_u == 100);
    CHECK(prob.outer.lipschitz_LF == doctest::Approx(1.0 / (0.95 * 10.0)));  // ~0.10526
    CHECK(prob.inner.constants.L == 0.0);

    CvarPortfolioParams noisy;
    noisy.assets = 4;
    noisy.scenarios = 6;
    noisy.alpha = 0.9;
    noisy.noise = NoiseSpec::gaussian(0.05);
    RngState rng2(5);
    const ProblemInstance np = make_cvar_portfolio(noisy, rng2);
    check_unbiased(np, 8000, rng2);
    check_jacobian_fd(np, rng2);
}

TEST_CASE("single-asset cvar reduces to a scalar problem") {
    CvarPortfolioParams p;
    p.assets = 1;
    p.scenarios = 40;
    p.alpha = 0.9;
    p.noise = NoiseSpec::none();
    RngState rng(12);
    const ProblemInstance prob = make_cvar_portfolio(p, rng);
    // the simplex coordinate is forced to one; sweep the scalar channel
    double best = std::numeric_limits<double>::infinity();
    for (double y0 = -1.0; y0 <= 1.0 + 1e-12; y0 += 1e-4) {
        const Vector x{1.0, y0};
        best = std::min(best, prob.objective_exact(x));
    }
    // equivalently the closed-form quantile expression of the fixed losses
    Vector losses(p.scenarios);
    const Vector probe{1.0, 0.0};
    const InnerSample s = prob.inner.exact(probe);
    for (int t = 0; t < p.scenarios; ++t) losses[t] = s.f[t];  // -r_t - 0
    const double closed = cvar_closed_form(losses, p.alpha);
    CHECK(best == doctest::Approx(closed).epsilon(1e-4));
}

TEST_CASE("matrix completion task") {
    MatrixCompletionParams p;
    p.rows = 30;
    p.cols = 20;
    p.rank = 5;
    p.density = 0.3;
    p.tau = 10.0;
    RngState rng(4);
    const ProblemInstance prob = make_matrix_completion(p, rng);
    CHECK(prob.inner.dim_x == 600);
    CHECK(prob.inner.dim_u == 180);
    CHECK(prob.inner.constants.L == 0.0);
    CHECK(prob.inner.constants.sigma_g == 0.0);

    // the jacobian is constant across points and queries
    RngState qrng(6);
    const Vector x1 = prob.domain.random_interior(qrng);
    const Vector x2 = prob.domain.random_interior(qrng);
    const Matrix j1 = prob.inner.query(x1, qrng).jac;
    const Matrix j2 = prob.inner.query(x2, qrng).jac;
    const Matrix j3 = prob.inner.exact(x2).jac;
    CHECK(j1.data == j2.data);
    CHECK(j2.data == j3.data);

    // exact recovery point
    MatrixCompletionParams clean = p;
    clean.noise = NoiseSpec::none();
    clean.tau = 1000.0;  // keep the ground truth inside the ball
    RngState rng2(4);
    const ProblemInstance cp = make_matrix_completion(clean, rng2);
    // reconstruct the ground truth from residuals at zero
    Vector truth(cp.inner.dim_x, 0.0);
    const InnerSample at_zero = cp.inner.exact(Vector(cp.inner.dim_x, 0.0));
    // f_k(0) = -M at the observed entries; build X = M on the mask
    for (int k = 0; k < cp.inner.dim_u; ++k)
        for (int j = 0; j < cp.inner.dim_x; ++j)
            if (at_zero.jac(k, j) == 1.0) truth[j] = -at_zero.f[k];
    CHECK(cp.objective_exact(truth) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("full-density rank-1 objective at zero is the mean absolute entry") {
    MatrixCompletionParams p;
    p.rows = 3;
    p.cols = 3;
    p.rank = 1;
    p.density = 1.0;
    p.tau = 5.0;
    p.noise = NoiseSpec::none();
    RngState rng(10);
    const ProblemInstance prob = make_matrix_completion(p, rng);
    const Vector zero(9, 0.0);
    const InnerSample s = prob.inner.exact(zero);
    double mean_abs = 0.0;
    for (double v : s.f) mean_abs += std::abs(v) / 9.0;
    CHECK(prob.objective_exact(zero) == doctest::Approx(mean_abs).epsilon(1e-12));
}

TEST_CASE("matrix completion rejects an empty mask") {
    MatrixCompletionParams p;
    p.rows = 10;
    p.cols = 10;
    p.rank = 1;
    p.density = 0.005;  // floor(0.5) observations
    RngState rng(1);
    CHECK_THROWS_AS(make_matrix_completion(p, rng), ConfigError);
}

TEST_CASE("custom quadratic constants are certified") {
    CustomQuadraticParams p;
    p.dim = 5;
    p.components = 2;
    p.noise = NoiseSpec::gaussian(0.3);
    RngState rng(21);
    const ProblemInstance prob = make_custom_quadratic(p, rng);
    CHECK(prob.inner.constants.sigma_f == doctest::Approx(0.3 * std::sqrt(2.0)));
    CHECK(prob.inner.constants.sigma_g == doctest::Approx(0.3 * std::sqrt(10.0)));
    check_jacobian_fd(prob, rng);
    RngState mc(3);
    check_unbiased(prob, 4000, mc);

    // G upper-bounds the jacobian frobenius norm everywhere on the ball
    for (int t = 0; t < 200; ++t) {
        const Vector x = prob.domain.random_interior(mc);
        CHECK(prob.inner.exact(x).jac.frobenius_norm() <= *prob.inner.constants.G + 1e-9);
    }
    // L upper-bounds the jacobian variation
    for (int t = 0; t < 200; ++t) {
        const Vector x = prob.domain.random_interior(mc);
        const Vector y = prob.domain.random_interior(mc);
        const double lhs = (prob.inner.exact(x).jac - prob.inner.exact(y).jac).frobenius_norm();
        CHECK(lhs <= prob.inner.constants.L * norm2(x - y) + 1e-9);
    }
}

TEST_CASE("libsvm parsing") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "compfw_libsvm";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "basic.txt");
        out << "1 1:0.5 3:2\n";
        out << "-1 2:1  # trailing comment\n";
        out << "# full comment line\n";
    }
    const LibsvmData data = load_libsvm((dir / "basic.txt").string());
    REQUIRE(data.features.rows == 2);
    REQUIRE(data.features.cols == 3);
    CHECK(data.labels[0] == 1.0);
    CHECK(data.labels[1] == -1.0);
    CHECK(data.features(0, 0) == 0.5);
    CHECK(data.features(0, 1) == 0.0);
    CHECK(data.features(0, 2) == 2.0);
    CHECK(data.features(1, 1) == 1.0);

    {
        std::ofstream out(dir / "bad.txt");
        out << "1 1:0.5\n";
        out << "2 oops\n";
    }
    CHECK_THROWS_WITH_AS(load_libsvm((dir / "bad.txt").string()),
                         doctest::Contains("line 2"), ParseError);
    {
        std::ofstream out(dir / "empty.txt");
        out << "# nothing\n";
    }
    CHECK_THROWS_AS(load_libsvm((dir / "empty.txt").string()), ConfigError);

    // round-trip of a random sparse matrix is bit-exact
    RngState rng(17);
    Matrix m(10, 6);
    Vector labels(10);
    for (int i = 0; i < 10; ++i) {
        labels[i] = rng.coin() ? 1.0 : -1.0;
        for (int j = 0; j < 6; ++j)
            if (rng.uniform() < 0.4) m(i, j) = rng.normal();
    }
    m(3, 5) = 0.123456789012345;  // keep the final column occupied
    save_libsvm((dir / "roundtrip.txt").string(), m, labels);
    const LibsvmData rt = load_libsvm((dir / "roundtrip.txt").string());
    REQUIRE(rt.features.rows == 10);
    REQUIRE(rt.features.cols == 6);
    CHECK(rt.features.data == m.data);
    CHECK(rt.labels == labels);
    fs::remove_all(dir);
}
