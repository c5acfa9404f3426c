#include <doctest.h>

#include <cmath>

#include "compfw/trackers.hpp"
#include "test_support.hpp"

using namespace compfw;

namespace {

ProblemInstance quadratic_problem(bool noisy, uint64_t seed = 21) {
    CustomQuadraticParams p;
    p.dim = 4;
    p.components = 2;
    p.tau = 1.0;
    p.noise = noisy ? NoiseSpec::gaussian(0.5) : NoiseSpec::none();
    RngState rng(seed);
    return make_custom_quadratic(p, rng);
}

}  // namespace

TEST_CASE("tracker initialization") {
    const ProblemInstance exact_prob = quadratic_problem(false);
    RngState rng(1);
    const Vector y0 = exact_prob.domain.default_point();
    const TrackerState st =
        init_trackers(exact_prob, y0, rng, JacobianTracker::polyak, FunctionTracker::polyak);
    const InnerSample e = exact_prob.inner.exact(y0);
    CHECK(st.z == e.f);
    CHECK(st.v.data == e.jac.data);
    CHECK(st.step_index == 0);
    CHECK_FALSE(st.prev_y.has_value());

    const TrackerState st2 =
        init_trackers(exact_prob, y0, rng, JacobianTracker::storm, FunctionTracker::taylor);
    CHECK(st2.prev_y.has_value());

    // identical seeds give identical state
    const ProblemInstance noisy = quadratic_problem(true);
    RngState a(7), b(7);
    const TrackerState sa =
        init_trackers(noisy, y0, a, JacobianTracker::polyak, FunctionTracker::taylor);
    const TrackerState sb =
        init_trackers(noisy, y0, b, JacobianTracker::polyak, FunctionTracker::taylor);
    CHECK(sa.z == sb.z);
    CHECK(sa.v.data == sb.v.data);

    // Monte Carlo mean of the function estimate matches the exact value
    const InnerSample te = noisy.inner.exact(y0);
    RngState mc(9);
    const int draws = 10000;
    Vector mean(noisy.inner.dim_u, 0.0), sq(noisy.inner.dim_u, 0.0);
    for (int t = 0; t < draws; ++t) {
        const TrackerState s =
            init_trackers(noisy, y0, mc, JacobianTracker::polyak, FunctionTracker::polyak);
        for (int i = 0; i < noisy.inner.dim_u; ++i) {
            mean[i] += s.z[i] / draws;
            sq[i] += s.z[i] * s.z[i] / draws;
        }
    }
    for (int i = 0; i < noisy.inner.dim_u; ++i) {
        const double se = std::sqrt(std::max(0.0, sq[i] - mean[i] * mean[i]) / draws) + 1e-12;
        CHECK(std::abs(mean[i] - te.f[i]) <= 3.0 * se);
    }
}

TEST_CASE("polyak jacobian update arithmetic") {
    TrackerState st;
    st.v = Matrix(1, 1);
    st.v(0, 0) = 2.0;
    Matrix sample(1, 1);
    sample(0, 0) = 4.0;
    update_jacobian_polyak(st, {0.0}, sample, 0.5);
    CHECK(st.v(0, 0) == 3.0);
    CHECK(st.step_index == 1);
    update_jacobian_polyak(st, {0.0}, sample, 1.0);
    CHECK(st.v(0, 0) == 4.0);

    // geometric contraction toward a constant sample
    TrackerState geo;
    geo.v = Matrix(2, 2);
    geo.v(0, 0) = 5.0;
    geo.v(1, 1) = -3.0;
    Matrix target(2, 2);
    target(0, 0) = 1.0;
    target(1, 0) = 2.0;
    const double init_dist = (geo.v - target).frobenius_norm();
    for (int k = 0; k < 50; ++k) update_jacobian_polyak(geo, {0.0, 0.0}, target, 0.25);
    const double expected = std::pow(0.75, 50) * init_dist;
    CHECK((geo.v - target).frobenius_norm() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("polyak function update arithmetic and stationary variance") {
    TrackerState st;
    st.z = {0.0};
    update_function_polyak(st, {2.0}, 0.5);
    CHECK(st.z[0] == 1.0);
    update_function_polyak(st, {2.0}, 1.0);
    CHECK(st.z[0] == 2.0);

    // AR(1) stationary variance rho sigma^2 / (2 - rho) per component
    const double rho = 0.3, sigma = 0.8;
    RngState rng(13);
    TrackerState ar;
    ar.z = {0.0};
    double mean = 0.0, sq = 0.0;
    const int burn = 2000, steps = 200000;
    for (int k = 0; k < burn + steps; ++k) {
        update_function_polyak(ar, {sigma * rng.normal()}, rho);
        if (k >= burn) {
            mean += ar.z[0] / steps;
            sq += ar.z[0] * ar.z[0] / steps;
        }
    }
    const double variance = sq - mean * mean;
    const double expected = rho * sigma * sigma / (2.0 - rho);
    CHECK(variance == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("taylor function update") {
    // full weight on the sample ignores the correction entirely
    TrackerState st;
    st.z = {10.0};
    st.prev_y = Vector{0.0};
    st.v = Matrix(1, 1);
    st.v(0, 0) = 100.0;
    update_function_taylor(st, {1.0}, st.v, {5.0}, 1.0);
    CHECK(st.z[0] == 5.0);
    CHECK(*st.prev_y == Vector{1.0});

    // zero displacement coincides with the polyak update
    TrackerState a, b;
    a.z = b.z = {2.0, -1.0};
    a.prev_y = Vector{0.5, 0.5};
    a.v = Matrix(2, 2);
    a.v(0, 0) = 3.0;
    update_function_taylor(a, {0.5, 0.5}, a.v, {1.0, 1.0}, 0.25);
    update_function_polyak(b, {1.0, 1.0}, 0.25);
    CHECK(a.z == b.z);

    // exact values and exact jacobian of a linear map: the extrapolation is
    // exact for every rho
    RngState rng(17);
    Matrix j(2, 3);
    for (double& v : j.data) v = rng.normal();
    const Vector c{0.3, -0.7};
    const auto f = [&](const Vector& x) { return c + j.apply(x); };
    TrackerState lin;
    Vector y = {0.1, 0.2, -0.3};
    lin.z = f(y);
    lin.prev_y = y;
    lin.v = j;
    for (int k = 0; k < 10; ++k) {
        Vector y_next = y;
        for (double& v : y_next) v += 0.1 * rng.normal();
        update_function_taylor(lin, y_next, j, f(y_next), 0.2);
        y = y_next;
        const Vector err = lin.z - f(y);
        CHECK(norm2(err) <= 1e-12);
    }

    TrackerState no_prev;
    no_prev.z = {0.0};
    no_prev.v = Matrix(1, 1);
    CHECK_THROWS_AS(update_function_taylor(no_prev, {1.0}, no_prev.v, {1.0}, 0.5), ConfigError);
}

TEST_CASE("storm update keeps the jacobian exact under an exact oracle") {
    const ProblemInstance prob = quadratic_problem(false);
    RngState rng(23);
    Vector y = prob.domain.default_point();
    TrackerState st = init_trackers(prob, y, rng, JacobianTracker::storm, FunctionTracker::taylor);
    for (int k = 1; k <= 20; ++k) {
        Vector y_next = prob.domain.random_interior(rng);
        const Vector f_sample = update_jacobian_storm(st, y_next, prob, rng, 0.3);
        update_function_taylor(st, y_next, st.v, f_sample, 0.3);
        const InnerSample e = prob.inner.exact(y_next);
        CHECK((st.v - e.jac).frobenius_norm() <= 1e-11);
        y = y_next;
    }
    CHECK(st.step_index == 20);

    // beta = 1 discards the correction
    TrackerState fresh = init_trackers(prob, y, rng, JacobianTracker::storm, FunctionTracker::taylor);
    const Vector y2 = prob.domain.random_interior(rng);
    update_jacobian_storm(fresh, y2, prob, rng, 1.0);
    CHECK((fresh.v - prob.inner.exact(y2).jac).frobenius_norm() <= 1e-12);

    TrackerState no_prev;
    no_prev.v = Matrix(2, 4);
    RngState r2(1);
    CHECK_THROWS_AS(update_jacobian_storm(no_prev, y, prob, r2, 0.5), ConfigError);
}

TEST_CASE("storm reuses one sample at both query points") {
    const ProblemInstance prob = quadratic_problem(true);
    RngState rng(29);
    const Vector y0 = prob.domain.default_point();
    TrackerState st = init_trackers(prob, y0, rng, JacobianTracker::storm, FunctionTracker::taylor);
    const Matrix v0 = st.v;
    const Vector y1 = prob.domain.random_interior(rng);
    const double beta = 0.25;

    // replay the tracker's substream by hand and reproduce the update
    RngState replay_parent = rng;
    RngState sub = replay_parent.spawn();
    RngState sub2 = sub;
    const InnerSample at_y1 = prob.inner.query(y1, sub);
    const InnerSample at_y0 = prob.inner.query(y0, sub2);
    update_jacobian_storm(st, y1, prob, rng, beta);
    Matrix expected = at_y1.jac;
    for (size_t i = 0; i < expected.data.size(); ++i)
        expected.data[i] += (1.0 - beta) * (v0.data[i] - at_y0.jac.data[i]);
    CHECK(st.v.data == expected.data);

    // the shared sample makes the additive noise identical at both points
    const Matrix noise_y1 = at_y1.jac - prob.inner.exact(y1).jac;
    const Matrix noise_y0 = at_y0.jac - prob.inner.exact(y0).jac;
    CHECK((noise_y1 - noise_y0).frobenius_norm() <= 1e-13);
}

TEST_CASE("hessian-corrected update") {
    // constant hessian: the correction reproduces the gradient difference
    // exactly for every alpha draw
    CustomQuadraticParams p;
    p.dim = 3;
    p.components = 2;
    p.noise = NoiseSpec::none();
    RngState prng(31);
    const ProblemInstance prob = make_custom_quadratic(p, prng);

    RngState rng(37);
    Vector y = prob.domain.default_point();
    TrackerState st =
        init_trackers(prob, y, rng, JacobianTracker::hessian_corrected, FunctionTracker::taylor);
    for (int k = 1; k <= 10; ++k) {
        const Vector y_next = prob.domain.random_interior(rng);
        const Vector f_sample = update_jacobian_hessian(st, y_next, prob, rng, 0.4);
        update_function_taylor(st, y_next, st.v, f_sample, 0.4);
        CHECK((st.v - prob.inner.exact(y_next).jac).frobenius_norm() <= 1e-11);
    }

    // zero displacement reduces to the polyak update
    TrackerState a =
        init_trackers(prob, y, rng, JacobianTracker::hessian_corrected, FunctionTracker::taylor);
    TrackerState b = a;
    RngState ra(5), rb(5);
    update_jacobian_hessian(a, y, prob, ra, 0.3);
    const InnerSample sample = prob.inner.query(y, rb);
    update_jacobian_polyak(b, y, sample.jac, 0.3);
    CHECK((a.v - b.v).frobenius_norm() <= 1e-13);

    // problems without a hessian oracle cannot select the corrected tracker
    ProblemInstance no_hess = prob;
    no_hess.inner.hessian_query = nullptr;
    CHECK_THROWS_AS(
        init_trackers(no_hess, y, rng, JacobianTracker::hessian_corrected, FunctionTracker::taylor),
        ConfigError);
}

TEST_CASE("trackers are exact at unit momentum with a noise-free oracle") {
    const ProblemInstance prob = quadratic_problem(false);
    RngState rng(41);
    const Vector y0 = prob.domain.default_point();
    for (const JacobianTracker jk :
         {JacobianTracker::polyak, JacobianTracker::storm, JacobianTracker::hessian_corrected}) {
        for (const FunctionTracker fk : {FunctionTracker::polyak, FunctionTracker::taylor}) {
            TrackerState st = init_trackers(prob, y0, rng, jk, FunctionTracker::taylor);
            st.fn_kind = fk;
            Vector y = y0;
            for (int k = 1; k <= 8; ++k) {
                const Vector y_next = prob.domain.random_interior(rng);
                Vector f_sample;
                switch (jk) {
                    case JacobianTracker::polyak: {
                        const InnerSample s = prob.inner.query(y_next, rng);
                        update_jacobian_polyak(st, y_next, s.jac, 1.0);
                        f_sample = s.f;
                        break;
                    }
                    case JacobianTracker::storm:
                        f_sample = update_jacobian_storm(st, y_next, prob, rng, 1.0);
                        break;
                    case JacobianTracker::hessian_corrected:
                        f_sample = update_jacobian_hessian(st, y_next, prob, rng, 1.0);
                        break;
                }
                if (fk == FunctionTracker::polyak)
                    update_function_polyak(st, f_sample, 1.0);
                else
                    update_function_taylor(st, y_next, st.v, f_sample, 1.0);
                const InnerSample e = prob.inner.exact(y_next);
                CHECK((st.v - e.jac).frobenius_norm() == 0.0);
                CHECK(norm2(st.z - e.f) == 0.0);
                y = y_next;
            }
        }
    }
}

TEST_CASE("taylor tracking error stays below polyak under pure drift") {
    // noise-free oracle, momentum < 1, moving iterates: the extrapolation
    // shrinks the lag from first to second order in the step length
    const ProblemInstance prob = quadratic_problem(false, 77);
    RngState path_rng(43);
    const double gamma = 0.05, rho = 0.2;

    const auto drift_error = [&](FunctionTracker fk) {
        RngState rng(1);
        Vector y = prob.domain.default_point();
        TrackerState st = init_trackers(prob, y, rng, JacobianTracker::polyak, fk);
        if (fk == FunctionTracker::taylor) st.prev_y = y;
        RngState dir_rng = path_rng;  // same deterministic path for both trackers
        double acc = 0.0;
        int counted = 0;
        for (int k = 1; k <= 200; ++k) {
            const Vector vertex = prob.domain.random_vertex(dir_rng);
            Vector y_next = y;
            for (size_t j = 0; j < y.size(); ++j)
                y_next[j] = (1.0 - gamma) * y[j] + gamma * vertex[j];
            const InnerSample s = prob.inner.query(y_next, rng);
            update_jacobian_polyak(st, y_next, s.jac, rho);
            if (fk == FunctionTracker::polyak)
                update_function_polyak(st, s.f, rho);
            else
                update_function_taylor(st, y_next, st.v, s.f, rho);
            y = y_next;
            if (k > 50) {
                acc += norm2(st.z - prob.inner.exact(y).f);
                ++counted;
            }
        }
        return acc / counted;
    };

    const double polyak_err = drift_error(FunctionTracker::polyak);
    const double taylor_err = drift_error(FunctionTracker::taylor);
    CHECK(taylor_err <= polyak_err);
}

TEST_CASE("schedule values") {
    const Schedule nc = Schedule::nonconvex(2.0);
    const ScheduleValues v16 = schedule_values(nc, 3, 16);
    CHECK(v16.gamma == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(v16.beta == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(v16.rho == doctest::Approx(0.25).epsilon(1e-12));

    const Schedule cv = Schedule::convex(2.0);
    CHECK(schedule_values(cv, 0, 100).gamma == doctest::Approx(1.0));
    CHECK(schedule_values(cv, 2, 100).gamma == doctest::Approx(0.5));
    // momentum decays like (k + k0)^{-2/3} and stays in (0, 1]
    for (int k = 0; k < 100; ++k) {
        const ScheduleValues v = schedule_values(cv, k, 100);
        CHECK(v.beta > 0.0);
        CHECK(v.beta <= 1.0);
        CHECK(v.beta == v.rho);
    }

    const Schedule st = Schedule::storm(2.0);
    const ScheduleValues s64 = schedule_values(st, 0, 64);
    CHECK(s64.gamma == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(s64.beta == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

    const Schedule dn = Schedule::deterministic_nonconvex();
    CHECK(schedule_values(dn, 0, 10).gamma == doctest::Approx(1.0));
    CHECK(schedule_values(dn, 3, 10).gamma == doctest::Approx(0.5));
    CHECK(schedule_values(dn, 3, 10).beta == 1.0);

    CHECK_THROWS_AS(schedule_values(nc, -1, 16), ConfigError);
    CHECK_THROWS_AS(schedule_values(nc, 16, 16), ConfigError);
    CHECK_THROWS_AS(schedule_values(Schedule::nonconvex(3.0), 0, 16), ConfigError);
    CHECK_THROWS_AS(schedule_values(Schedule::custom_constant(0.0, 1.0, 1.0), 0, 4), ConfigError);
}
