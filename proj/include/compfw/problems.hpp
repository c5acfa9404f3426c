#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "compfw/numerics.hpp"

// Problem abstraction: a stochastic inner map f : X -> R^n with unbiased
// value/Jacobian queries, a non-smooth outer function F(u, x), and a compact
// feasible domain. Includes the synthetic benchmark tasks and LIBSVM
// ingestion for user-supplied data.

namespace compfw {

// ---------------------------------------------------------------------------
// Outer functions

enum class OuterKind {
    max_of_components,
    cvar,
    l1_norm_mean,
    additive_composite,
    linear_first_component,
};

enum class RegularizerKind { zero, l1_penalty };

struct OuterFunction {
    OuterKind kind = OuterKind::linear_first_component;
    int arity = 1;              // dimension n of u
    double alpha = 0.95;        // cvar only
    RegularizerKind reg_kind = RegularizerKind::zero;
    double reg_lambda = 0.0;    // additive_composite only
    double lipschitz_LF = 1.0;

    static OuterFunction max_of(int n);
    // Portfolio-style CVaR outer: reads the scalar channel y0 from the last
    // coordinate of x and adds the averaged hinge of u.
    static OuterFunction cvar_portfolio(int n, double alpha);
    static OuterFunction l1_mean(int n);
    static OuterFunction composite(RegularizerKind reg, double lambda);
    static OuterFunction linear_first();
};

double outer_eval(const OuterFunction& f, const Vector& u, const Vector& x);

// inf over the scalar shift of [t + (1/((1-alpha) n)) sum max(0, u_i - t)],
// computed by sorting; the minimizing shift is the empirical alpha-quantile.
double cvar_closed_form(Vector losses, double alpha);

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { l1_ball, simplex_cross_interval, nuclear_ball, box };

struct DomainSpec {
    DomainKind kind = DomainKind::l1_ball;
    int dim = 0;        // total decision dimension (rows*cols for matrices)
    double tau = 1.0;   // l1/nuclear radius
    double lo = -1.0;   // interval/box bounds
    double hi = 1.0;
    int mat_rows = 0;   // nuclear only
    int mat_cols = 0;
    double diameter = 0.0;  // Euclidean diameter

    static DomainSpec l1_ball(int d, double tau);
    static DomainSpec simplex_cross_interval(int d_simplex, double lo, double hi);
    static DomainSpec nuclear_ball(int rows, int cols, double tau);
    static DomainSpec box(int d, double lo, double hi);

    // For the nuclear ball this checks the Frobenius norm, a necessary
    // condition only; exact membership needs a full SVD.
    bool contains(const Vector& x, double tol = 1e-8) const;
    Vector default_point() const;
    Vector random_vertex(RngState& rng) const;
    Vector random_interior(RngState& rng) const;
};

// ---------------------------------------------------------------------------
// Inner oracle

struct InnerSample {
    Vector f;    // dim n
    Matrix jac;  // n x d
};

struct InnerConstants {
    double L = 0.0;
    std::optional<double> G;
    double sigma_f = 0.0;
    double sigma_g = 0.0;
    std::optional<double> sigma_H;
    double r = 2.0;
};

struct InnerOracle {
    int dim_x = 0;
    int dim_u = 0;
    std::function<InnerSample(const Vector&, RngState&)> query;
    std::function<InnerSample(const Vector&)> exact;  // may be empty
    // n Hessian slices of d x d, one per component of f.
    std::function<std::vector<Matrix>(const Vector&, RngState&)> hessian_query;
    InnerConstants constants;

    bool has_exact() const { return static_cast<bool>(exact); }
    bool has_hessian() const { return static_cast<bool>(hessian_query); }
};

struct ProblemInstance {
    InnerOracle inner;
    OuterFunction outer;
    DomainSpec domain;
    std::string name;

    // F(f(x), x) through the exact oracle.
    double objective_exact(const Vector& x) const;
};

// ---------------------------------------------------------------------------
// Task factories

struct MinimaxRegressionParams {
    int groups = 10;
    int dim = 100;
    double tau = 5.0;
    int samples_per_group = 50;
    NoiseSpec noise = NoiseSpec::none();
    // Per-group label-noise scales; linearly spaced defaults when empty.
    Vector group_noise_scales;
};

ProblemInstance make_minimax_regression(const MinimaxRegressionParams& p, RngState& rng);

// Same objective built from user data split into `groups` label-stratified
// subsets.
ProblemInstance make_minimax_from_data(const Matrix& features, const Vector& labels, int groups,
                                       double tau, const NoiseSpec& noise, RngState& rng);

struct CvarPortfolioParams {
    int assets = 50;
    double alpha = 0.95;
    int scenarios = 100;  // scenario count n
    NoiseSpec noise = NoiseSpec::pareto(0.02, 2.0);
};

ProblemInstance make_cvar_portfolio(const CvarPortfolioParams& p, RngState& rng);

struct MatrixCompletionParams {
    int rows = 30;
    int cols = 20;
    int rank = 5;
    double density = 0.3;
    double tau = 10.0;
    NoiseSpec noise = NoiseSpec::laplace(0.1);
};

ProblemInstance make_matrix_completion(const MatrixCompletionParams& p, RngState& rng);

struct CustomQuadraticParams {
    int dim = 5;
    int components = 2;
    double tau = 1.0;
    bool convex = true;
    NoiseSpec noise = NoiseSpec::none();       // additive, on values and Jacobians
    double hessian_noise_scale = 0.0;          // per-entry Gaussian on the slices
};

// max of n quadratics over an l1 ball with exact constants; the controlled
// instance used for tracker diagnostics and deterministic-mode checks.
ProblemInstance make_custom_quadratic(const CustomQuadraticParams& p, RngState& rng);

// ---------------------------------------------------------------------------
// LIBSVM ingestion: "label idx:val idx:val ...", 1-based indices, '#' starts
// a comment. Missing indices are zero-filled up to the global max index.

struct LibsvmData {
    Matrix features;
    Vector labels;
};

LibsvmData load_libsvm(const std::string& path);
void save_libsvm(const std::string& path, const Matrix& features, const Vector& labels);

}  // namespace compfw
