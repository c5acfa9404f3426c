#pragma once

#include <optional>

#include "compfw/numerics.hpp"
#include "compfw/problems.hpp"

// Momentum estimators for the inner map: the Polyak Jacobian tracker, the
// Polyak and Taylor-corrected function trackers, and the STORM and
// Hessian-corrected Jacobian trackers. A tracker state is owned by a single
// run; updates are sequential by construction.

namespace compfw {

enum class JacobianTracker { polyak, storm, hessian_corrected };
enum class FunctionTracker { polyak, taylor };

struct TrackerState {
    Matrix v;   // Jacobian estimate, n x d
    Vector z;   // function estimate, dim n
    std::optional<Vector> prev_y;
    JacobianTracker jac_kind = JacobianTracker::polyak;
    FunctionTracker fn_kind = FunctionTracker::polyak;
    int step_index = 0;
};

// One oracle draw initializes both estimates from the same sample.
TrackerState init_trackers(const ProblemInstance& problem, const Vector& y0, RngState& rng,
                           JacobianTracker jac_kind, FunctionTracker fn_kind);

// V <- (1 - beta) V + beta sample_jac
void update_jacobian_polyak(TrackerState& state, const Vector& y_k, const Matrix& sample_jac,
                            double beta);

// z <- (1 - rho) z + rho sample_f
void update_function_polyak(TrackerState& state, const Vector& sample_f, double rho);

// z <- (1 - rho) [z + V (y_k - y_prev)] + rho sample_f; refreshes prev_y.
void update_function_taylor(TrackerState& state, const Vector& y_k, const Matrix& v_k,
                            const Vector& sample_f, double rho);

// V <- grad_sample(y_k; xi) + (1 - beta) [V - grad_sample(y_prev; xi)] with
// the SAME xi at both points, realized by replaying a derived substream.
// Returns the function sample at y_k for the function tracker.
Vector update_jacobian_storm(TrackerState& state, const Vector& y_k,
                             const ProblemInstance& problem, RngState& rng, double beta);

// V <- (1 - beta) V + beta grad_sample + (1 - beta) H(y_alpha)(y_k - y_prev)
// with alpha ~ U(0, 1) and an independent Hessian draw. Returns the function
// sample at y_k.
Vector update_jacobian_hessian(TrackerState& state, const Vector& y_k,
                               const ProblemInstance& problem, RngState& rng, double beta);

enum class ScheduleKind {
    nonconvex_constant,
    convex_decreasing,
    deterministic_nonconvex,
    deterministic_convex,
    storm_constant,
    custom,
};

// Step-size schedule; the horizon K enters at evaluation time so one schedule
// serves a whole K grid.
struct Schedule {
    ScheduleKind kind = ScheduleKind::nonconvex_constant;
    double r = 2.0;
    double c0 = 1.0;
    int k0 = 0;  // 0: derived from r as in the decreasing-schedule analysis
    double custom_gamma = 1.0;
    double custom_beta = 1.0;
    double custom_rho = 1.0;

    static Schedule nonconvex(double r = 2.0);
    static Schedule convex(double r = 2.0);
    static Schedule deterministic_nonconvex();
    static Schedule deterministic_convex();
    static Schedule storm(double r = 2.0);
    static Schedule custom_constant(double gamma, double beta, double rho);
};

struct ScheduleValues {
    double gamma = 1.0;
    double beta = 1.0;
    double rho = 1.0;
};

ScheduleValues schedule_values(const Schedule& s, int k, int K);

}  // namespace compfw
