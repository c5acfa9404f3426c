#include "compfw/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "compfw/metrics.hpp"

namespace compfw {

const char* variant_name(SolverVariant v) {
    switch (v) {
        case SolverVariant::variant1: return "variant1";
        case SolverVariant::variant2: return "variant2";
        case SolverVariant::storm: return "storm";
        case SolverVariant::hessian: return "hessian";
        case SolverVariant::vanilla_scfw: return "vanilla";
        case SolverVariant::clipped_scfw: return "clipped";
        case SolverVariant::deterministic_basic: return "deterministic";
    }
    return "unknown";
}

bool RunRecord::deterministic_equals(const RunRecord& other) const {
    if (rows.size() != other.rows.size() || min_gap != other.min_gap ||
        argmin_k != other.argmin_k || total_oracle_calls != other.total_oracle_calls ||
        exact_metrics != other.exact_metrics || final_y != other.final_y)
        return false;
    for (size_t i = 0; i < rows.size(); ++i) {
        const TraceRow& a = rows[i];
        const TraceRow& b = other.rows[i];
        const auto eq = [](double x, double y) {
            return (std::isnan(x) && std::isnan(y)) || x == y;
        };
        if (a.k != b.k || !eq(a.objective, b.objective) || !eq(a.gap, b.gap) ||
            !eq(a.delta_g_norm, b.delta_g_norm) || !eq(a.delta_f_norm, b.delta_f_norm) ||
            a.glmo_inner_iters != b.glmo_inner_iters)
            return false;
    }
    return true;
}

namespace {

struct LoopState {
    const ProblemInstance& problem;
    const SolverConfig& config;
    RunRecord record;
    std::chrono::steady_clock::time_point start;
    double nan = std::numeric_limits<double>::quiet_NaN();

    explicit LoopState(const ProblemInstance& p, const SolverConfig& c)
        : problem(p), config(c), start(std::chrono::steady_clock::now()) {
        record.exact_metrics = p.inner.has_exact();
        record.min_gap = std::numeric_limits<double>::infinity();
        record.argmin_k = 0;
    }

    void record_row(int k, const Vector& y, const Matrix* v, const Vector* z, int inner_iters) {
        TraceRow row;
        row.k = k;
        row.glmo_inner_iters = inner_iters;
        if (record.exact_metrics) {
            const InnerSample exact = problem.inner.exact(y);
            row.objective = outer_eval(problem.outer, exact.f, y);
            AffineSurrogate s{exact.f, exact.jac, y};
            GlmoParams gap_params = config.glmo;
            gap_params.inner_budget *= 5;
            row.gap = row.objective -
                      glmo_solve(problem.outer, problem.domain, s, gap_params).surrogate_value;
            row.delta_g_norm = v ? (*v - exact.jac).frobenius_norm() : 0.0;
            row.delta_f_norm = z ? norm2(*z - exact.f) : 0.0;
            if (row.gap < record.min_gap) {
                record.min_gap = row.gap;
                record.argmin_k = k;
            }
        } else {
            row.objective = row.gap = row.delta_g_norm = row.delta_f_norm = nan;
        }
        row.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        record.rows.push_back(row);
    }
};

Matrix clip_frobenius(Matrix jac, double threshold) {
    const double norm = jac.frobenius_norm();
    if (norm > threshold) {
        const double scale = threshold / norm;
        for (double& v : jac.data) v *= scale;
    }
    return jac;
}

}  // namespace

RunRecord run(const ProblemInstance& problem, const SolverConfig& config, const Vector& y0) {
    if (config.iterations < 0) throw ConfigError("run: negative iteration count");
    if (!problem.domain.contains(y0, 1e-8)) throw ConfigError("run: infeasible start point");
    if (config.variant == SolverVariant::clipped_scfw && !(config.clip_threshold > 0.0))
        throw ConfigError("run: clip threshold must be positive");
    if (config.variant == SolverVariant::deterministic_basic && !problem.inner.has_exact())
        throw ConfigError("run: deterministic mode needs the exact oracle");

    const int total = config.iterations;
    const int every = config.record_every > 0 ? config.record_every : std::max(1, total / 512);
    const bool deterministic = config.variant == SolverVariant::deterministic_basic;
    const bool sample_surrogate = config.variant == SolverVariant::vanilla_scfw ||
                                  config.variant == SolverVariant::clipped_scfw;

    RngState rng(config.seed);
    LoopState loop(problem, config);
    Vector y = y0;

    TrackerState trackers;
    if (!deterministic) {
        JacobianTracker jk = JacobianTracker::polyak;
        FunctionTracker fk = FunctionTracker::polyak;
        switch (config.variant) {
            case SolverVariant::variant2: fk = FunctionTracker::taylor; break;
            case SolverVariant::storm:
                jk = JacobianTracker::storm;
                fk = FunctionTracker::taylor;
                break;
            case SolverVariant::hessian:
                jk = JacobianTracker::hessian_corrected;
                fk = FunctionTracker::taylor;
                break;
            default: break;
        }
        trackers = init_trackers(problem, y, rng, jk, fk);
        loop.record.total_oracle_calls += 1;
        if (sample_surrogate && config.variant == SolverVariant::clipped_scfw)
            trackers.v = clip_frobenius(trackers.v, config.clip_threshold);
    } else {
        const InnerSample exact = problem.inner.exact(y);
        trackers.v = exact.jac;
        trackers.z = exact.f;
        loop.record.total_oracle_calls += 1;
    }

    for (int k = 0; k < total; ++k) {
        if (k > 0) {
            const ScheduleValues sv = schedule_values(config.schedule, k, total);
            if (deterministic) {
                const InnerSample exact = problem.inner.exact(y);
                trackers.v = exact.jac;
                trackers.z = exact.f;
                loop.record.total_oracle_calls += 1;
            } else if (sample_surrogate) {
                InnerSample s = problem.inner.query(y, rng);
                loop.record.total_oracle_calls += 1;
                if (config.variant == SolverVariant::clipped_scfw)
                    s.jac = clip_frobenius(std::move(s.jac), config.clip_threshold);
                update_jacobian_polyak(trackers, y, s.jac, 1.0);
                update_function_polyak(trackers, s.f, 1.0);
            } else {
                switch (config.variant) {
                    case SolverVariant::variant1: {
                        const InnerSample s = problem.inner.query(y, rng);
                        loop.record.total_oracle_calls += 1;
                        update_jacobian_polyak(trackers, y, s.jac, sv.beta);
                        update_function_polyak(trackers, s.f, sv.rho);
                        break;
                    }
                    case SolverVariant::variant2: {
                        const InnerSample s = problem.inner.query(y, rng);
                        loop.record.total_oracle_calls += 1;
                        update_jacobian_polyak(trackers, y, s.jac, sv.beta);
                        update_function_taylor(trackers, y, trackers.v, s.f, sv.rho);
                        break;
                    }
                    case SolverVariant::storm: {
                        // jacobian update reads prev_y; taylor update refreshes it
                        const Vector f_sample =
                            update_jacobian_storm(trackers, y, problem, rng, sv.beta);
                        loop.record.total_oracle_calls += 2;
                        update_function_taylor(trackers, y, trackers.v, f_sample, sv.rho);
                        break;
                    }
                    case SolverVariant::hessian: {
                        const Vector f_sample =
                            update_jacobian_hessian(trackers, y, problem, rng, sv.beta);
                        loop.record.total_oracle_calls += 2;
                        update_function_taylor(trackers, y, trackers.v, f_sample, sv.rho);
                        break;
                    }
                    default: break;
                }
            }
        }

        AffineSurrogate surrogate{trackers.z, trackers.v, y};
        GlmoResult step;
        try {
            step = glmo_solve(problem.outer, problem.domain, surrogate, config.glmo);
        } catch (const std::exception& e) {
            throw OracleError("run: GLMO failed at step " + std::to_string(k) + ": " + e.what());
        }

        if (k % every == 0)
            loop.record_row(k, y, &trackers.v, &trackers.z, step.inner_iterations);

        const double gamma = schedule_values(config.schedule, k, total).gamma;
        for (size_t j = 0; j < y.size(); ++j)
            y[j] = (1.0 - gamma) * y[j] + gamma * step.x_star[j];
    }

    loop.record_row(total, y, &trackers.v, &trackers.z, 0);
    loop.record.final_y = y;
    if (!std::isfinite(loop.record.min_gap)) loop.record.min_gap = loop.nan;
    return loop.record;
}

RunRecord run(const ProblemInstance& problem, const SolverConfig& config) {
    return run(problem, config, problem.domain.default_point());
}

RunRecord run_vanilla_scfw(const ProblemInstance& problem, const SolverConfig& config,
                           const Vector& y0) {
    SolverConfig c = config;
    c.variant = SolverVariant::vanilla_scfw;
    return run(problem, c, y0);
}

RunRecord run_clipped_scfw(const ProblemInstance& problem, const SolverConfig& config,
                           const Vector& y0) {
    SolverConfig c = config;
    c.variant = SolverVariant::clipped_scfw;
    return run(problem, c, y0);
}

}  // namespace compfw
