#pragma once

#include <cstdint>
#include <vector>

#include "compfw/glmo.hpp"
#include "compfw/problems.hpp"
#include "compfw/trackers.hpp"

// The main optimization loop wiring trackers, generalized LMO and schedule,
// together with the no-variance-reduction baselines and the deterministic
// basic mode.

namespace compfw {

enum class SolverVariant {
    variant1,            // Polyak Jacobian + Polyak function tracker
    variant2,            // Polyak Jacobian + Taylor function tracker
    storm,               // STORM Jacobian + Taylor function tracker
    hessian,             // Hessian-corrected Jacobian + Taylor function tracker
    vanilla_scfw,        // raw single-sample surrogate
    clipped_scfw,        // vanilla with the sample Jacobian clipped in norm
    deterministic_basic  // exact surrogate, no sampling
};

const char* variant_name(SolverVariant v);

struct SolverConfig {
    SolverVariant variant = SolverVariant::variant2;
    Schedule schedule = Schedule::nonconvex();
    int iterations = 1024;  // K
    uint64_t seed = 1;
    GlmoParams glmo;
    double clip_threshold = 1.0;  // clipped_scfw only
    int record_every = 0;         // 0: max(1, K / 512)
};

struct TraceRow {
    int k = 0;
    double objective = 0.0;    // exact oracle; NaN when unavailable
    double gap = 0.0;          // raw generalized FW gap; NaN when unavailable
    double delta_g_norm = 0.0; // ||V_k - grad f(y_k)||_F
    double delta_f_norm = 0.0; // ||z_k - f(y_k)||
    int glmo_inner_iters = 0;
    int64_t elapsed_ns = 0;
};

struct RunRecord {
    std::vector<TraceRow> rows;
    double min_gap = 0.0;
    int argmin_k = 0;
    int64_t total_oracle_calls = 0;
    bool exact_metrics = false;  // gap/objective columns populated
    Vector final_y;

    // Field-wise equality ignoring wall-clock times.
    bool deterministic_equals(const RunRecord& other) const;
};

// Runs exactly K iterations from y0 (the domain default when omitted):
// tracker update, one generalized LMO call, convex-combination step. Metrics
// are recorded through the exact oracle, never the trackers.
RunRecord run(const ProblemInstance& problem, const SolverConfig& config, const Vector& y0);
RunRecord run(const ProblemInstance& problem, const SolverConfig& config);

// Baselines: the raw single-sample surrogate, optionally with the sample
// Jacobian rescaled to Frobenius norm <= clip_threshold.
RunRecord run_vanilla_scfw(const ProblemInstance& problem, const SolverConfig& config,
                           const Vector& y0);
RunRecord run_clipped_scfw(const ProblemInstance& problem, const SolverConfig& config,
                           const Vector& y0);

}  // namespace compfw
