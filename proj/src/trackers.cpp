#include "compfw/trackers.hpp"

#include <cassert>
#include <cmath>

namespace compfw {

TrackerState init_trackers(const ProblemInstance& problem, const Vector& y0, RngState& rng,
                           JacobianTracker jac_kind, FunctionTracker fn_kind) {
    if (jac_kind == JacobianTracker::hessian_corrected && !problem.inner.has_hessian())
        throw ConfigError("init_trackers: hessian-corrected tracker needs a Hessian oracle");
    TrackerState state;
    state.jac_kind = jac_kind;
    state.fn_kind = fn_kind;
    InnerSample s = problem.inner.query(y0, rng);
    state.v = std::move(s.jac);
    state.z = std::move(s.f);
    if (jac_kind != JacobianTracker::polyak || fn_kind == FunctionTracker::taylor)
        state.prev_y = y0;
    state.step_index = 0;
    return state;
}

void update_jacobian_polyak(TrackerState& state, const Vector& y_k, const Matrix& sample_jac,
                            double beta) {
    assert(beta > 0.0 && beta <= 1.0);
    (void)y_k;
    for (size_t i = 0; i < state.v.data.size(); ++i)
        state.v.data[i] = (1.0 - beta) * state.v.data[i] + beta * sample_jac.data[i];
    ++state.step_index;
}

void update_function_polyak(TrackerState& state, const Vector& sample_f, double rho) {
    assert(rho > 0.0 && rho <= 1.0);
    for (size_t i = 0; i < state.z.size(); ++i)
        state.z[i] = (1.0 - rho) * state.z[i] + rho * sample_f[i];
}

void update_function_taylor(TrackerState& state, const Vector& y_k, const Matrix& v_k,
                            const Vector& sample_f, double rho) {
    assert(rho > 0.0 && rho <= 1.0);
    if (!state.prev_y) throw ConfigError("update_function_taylor: prev_y missing");
    const Vector extrapolated = state.z + v_k.apply(y_k - *state.prev_y);
    for (size_t i = 0; i < state.z.size(); ++i)
        state.z[i] = (1.0 - rho) * extrapolated[i] + rho * sample_f[i];
    state.prev_y = y_k;
}

Vector update_jacobian_storm(TrackerState& state, const Vector& y_k,
                             const ProblemInstance& problem, RngState& rng, double beta) {
    assert(beta > 0.0 && beta <= 1.0);
    if (!state.prev_y) throw ConfigError("update_jacobian_storm: prev_y missing");
    // One sample, two points: replay the same substream at y_k and y_prev.
    RngState sub = rng.spawn();
    RngState replay = sub;
    InnerSample at_yk = problem.inner.query(y_k, sub);
    InnerSample at_prev = problem.inner.query(*state.prev_y, replay);
    for (size_t i = 0; i < state.v.data.size(); ++i)
        state.v.data[i] =
            at_yk.jac.data[i] + (1.0 - beta) * (state.v.data[i] - at_prev.jac.data[i]);
    ++state.step_index;
    return at_yk.f;
}

Vector update_jacobian_hessian(TrackerState& state, const Vector& y_k,
                               const ProblemInstance& problem, RngState& rng, double beta) {
    assert(beta > 0.0 && beta <= 1.0);
    if (!state.prev_y) throw ConfigError("update_jacobian_hessian: prev_y missing");
    if (!problem.inner.has_hessian())
        throw ConfigError("update_jacobian_hessian: problem has no Hessian oracle");

    InnerSample at_yk = problem.inner.query(y_k, rng);
    const double alpha = rng.uniform();
    const Vector displacement = y_k - *state.prev_y;
    const Vector y_alpha = axpy(*state.prev_y, alpha, displacement);
    const std::vector<Matrix> slices = problem.inner.hessian_query(y_alpha, rng);

    const int n = state.v.rows;
    const int d = state.v.cols;
    for (int i = 0; i < n; ++i) {
        const Vector correction = slices[i].apply(displacement);
        for (int j = 0; j < d; ++j)
            state.v(i, j) = (1.0 - beta) * state.v(i, j) + beta * at_yk.jac(i, j) +
                            (1.0 - beta) * correction[j];
    }
    ++state.step_index;
    return at_yk.f;
}

Schedule Schedule::nonconvex(double r) {
    Schedule s;
    s.kind = ScheduleKind::nonconvex_constant;
    s.r = r;
    return s;
}

Schedule Schedule::convex(double r) {
    Schedule s;
    s.kind = ScheduleKind::convex_decreasing;
    s.r = r;
    return s;
}

Schedule Schedule::deterministic_nonconvex() {
    Schedule s;
    s.kind = ScheduleKind::deterministic_nonconvex;
    return s;
}

Schedule Schedule::deterministic_convex() {
    Schedule s;
    s.kind = ScheduleKind::deterministic_convex;
    return s;
}

Schedule Schedule::storm(double r) {
    Schedule s;
    s.kind = ScheduleKind::storm_constant;
    s.r = r;
    return s;
}

Schedule Schedule::custom_constant(double gamma, double beta, double rho) {
    Schedule s;
    s.kind = ScheduleKind::custom;
    s.custom_gamma = gamma;
    s.custom_beta = beta;
    s.custom_rho = rho;
    return s;
}

ScheduleValues schedule_values(const Schedule& s, int k, int K) {
    if (k < 0 || k >= K) throw ConfigError("schedule_values: need 0 <= k < K");
    const double kk = static_cast<double>(K);
    ScheduleValues v;
    switch (s.kind) {
        case ScheduleKind::nonconvex_constant: {
            if (!(s.r > 1.0 && s.r <= 2.0)) throw ConfigError("schedule: r must lie in (1, 2]");
            v.gamma = std::pow(kk, -(2.0 * s.r - 1.0) / (3.0 * s.r - 2.0));
            v.beta = v.rho = std::pow(kk, -s.r / (3.0 * s.r - 2.0));
            break;
        }
        case ScheduleKind::convex_decreasing: {
            if (!(s.r > 1.0 && s.r <= 2.0)) throw ConfigError("schedule: r must lie in (1, 2]");
            const double y = s.r / (2.0 * s.r - 1.0);
            const double q = y * (s.r - 1.0);
            const int k0 =
                s.k0 > 0 ? s.k0 : static_cast<int>(std::ceil(std::pow(4.0 * q, 1.0 / (1.0 - y)))) + 2;
            v.gamma = 2.0 / (k + 2.0);
            v.beta = v.rho = std::min(1.0, s.c0 / std::pow(k + k0, y));
            break;
        }
        case ScheduleKind::deterministic_nonconvex:
            v.gamma = 1.0 / std::sqrt(k + 1.0);
            v.beta = v.rho = 1.0;
            break;
        case ScheduleKind::deterministic_convex:
            v.gamma = 2.0 / (k + 2.0);
            v.beta = v.rho = 1.0;
            break;
        case ScheduleKind::storm_constant: {
            if (!(s.r > 1.0 && s.r <= 2.0)) throw ConfigError("schedule: r must lie in (1, 2]");
            v.gamma = v.beta = v.rho = std::pow(kk, -s.r / (2.0 * s.r - 1.0));
            break;
        }
        case ScheduleKind::custom:
            if (!(s.custom_gamma > 0.0 && s.custom_gamma <= 1.0) ||
                !(s.custom_beta > 0.0 && s.custom_beta <= 1.0) ||
                !(s.custom_rho > 0.0 && s.custom_rho <= 1.0))
                throw ConfigError("schedule: custom values must lie in (0, 1]");
            v.gamma = s.custom_gamma;
            v.beta = s.custom_beta;
            v.rho = s.custom_rho;
            break;
    }
    return v;
}

}  // namespace compfw
