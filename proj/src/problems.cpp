#include "compfw/problems.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace compfw {

// ---------------------------------------------------------------------------
// Outer functions

OuterFunction OuterFunction::max_of(int n) {
    OuterFunction f;
    f.kind = OuterKind::max_of_components;
    f.arity = n;
    f.lipschitz_LF = 1.0;
    return f;
}

OuterFunction OuterFunction::cvar_portfolio(int n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("cvar: alpha must lie in (0, 1)");
    OuterFunction f;
    f.kind = OuterKind::cvar;
    f.arity = n;
    f.alpha = alpha;
    f.lipschitz_LF = 1.0 / (alpha * std::sqrt(static_cast<double>(n)));
    return f;
}

OuterFunction OuterFunction::l1_mean(int n) {
    OuterFunction f;
    f.kind = OuterKind::l1_norm_mean;
    f.arity = n;
    f.lipschitz_LF = 1.0 / std::sqrt(static_cast<double>(n));
    return f;
}

OuterFunction OuterFunction::composite(RegularizerKind reg, double lambda) {
    OuterFunction f;
    f.kind = OuterKind::additive_composite;
    f.arity = 1;
    f.reg_kind = reg;
    f.reg_lambda = lambda;
    f.lipschitz_LF = 1.0;
    return f;
}

OuterFunction OuterFunction::linear_first() {
    OuterFunction f;
    f.kind = OuterKind::linear_first_component;
    f.arity = 1;
    f.lipschitz_LF = 1.0;
    return f;
}

double outer_eval(const OuterFunction& f, const Vector& u, const Vector& x) {
    if (static_cast<int>(u.size()) != f.arity)
        throw ConfigError("outer_eval: arity mismatch");
    switch (f.kind) {
        case OuterKind::max_of_components:
            return *std::max_element(u.begin(), u.end());
        case OuterKind::cvar: {
            // y0 channel is the last decision coordinate.
            const double y0 = x.empty() ? 0.0 : x.back();
            double hinge = 0.0;
            for (double ui : u) hinge += std::max(0.0, ui);
            return y0 + hinge / ((1.0 - f.alpha) * f.arity);
        }
        case OuterKind::l1_norm_mean: {
            double acc = 0.0;
            for (double ui : u) acc += std::abs(ui);
            return acc / f.arity;
        }
        case OuterKind::additive_composite: {
            double reg = 0.0;
            if (f.reg_kind == RegularizerKind::l1_penalty)
                for (double xi : x) reg += f.reg_lambda * std::abs(xi);
            return u[0] + reg;
        }
        case OuterKind::linear_first_component:
            return u[0];
    }
    throw ConfigError("outer_eval: unknown kind");
}

double cvar_closed_form(Vector losses, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("cvar: alpha must lie in (0, 1)");
    if (losses.empty()) throw ConfigError("cvar: empty loss vector");
    const int n = static_cast<int>(losses.size());
    std::sort(losses.begin(), losses.end());
    // g(t) = t + w * sum max(0, u_i - t) is piecewise linear with kinks at the
    // order statistics; scan them and keep the best.
    const double w = 1.0 / ((1.0 - alpha) * n);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
        const double t = k < n ? losses[k] : losses[n - 1];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += std::max(0.0, losses[i] - t);
        best = std::min(best, t + w * acc);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Domains

DomainSpec DomainSpec::l1_ball(int d, double tau) {
    if (d < 1 || !(tau > 0.0)) throw ConfigError("l1_ball: need d >= 1, tau > 0");
    DomainSpec s;
    s.kind = DomainKind::l1_ball;
    s.dim = d;
    s.tau = tau;
    s.diameter = 2.0 * tau;
    return s;
}

DomainSpec DomainSpec::simplex_cross_interval(int d_simplex, double lo, double hi) {
    if (d_simplex < 1 || !(hi >= lo)) throw ConfigError("simplex_cross_interval: bad parameters");
    DomainSpec s;
    s.kind = DomainKind::simplex_cross_interval;
    s.dim = d_simplex + 1;
    s.lo = lo;
    s.hi = hi;
    const double simplex_diam2 = d_simplex > 1 ? 2.0 : 0.0;
    s.diameter = std::sqrt(simplex_diam2 + (hi - lo) * (hi - lo));
    return s;
}

DomainSpec DomainSpec::nuclear_ball(int rows, int cols, double tau) {
    if (rows < 1 || cols < 1 || !(tau > 0.0)) throw ConfigError("nuclear_ball: bad parameters");
    DomainSpec s;
    s.kind = DomainKind::nuclear_ball;
    s.dim = rows * cols;
    s.tau = tau;
    s.mat_rows = rows;
    s.mat_cols = cols;
    s.diameter = 2.0 * tau;
    return s;
}

DomainSpec DomainSpec::box(int d, double lo, double hi) {
    if (d < 1 || !(hi >= lo)) throw ConfigError("box: bad parameters");
    DomainSpec s;
    s.kind = DomainKind::box;
    s.dim = d;
    s.lo = lo;
    s.hi = hi;
    s.diameter = (hi - lo) * std::sqrt(static_cast<double>(d));
    return s;
}

bool DomainSpec::contains(const Vector& x, double tol) const {
    if (static_cast<int>(x.size()) != dim) return false;
    switch (kind) {
        case DomainKind::l1_ball: {
            double acc = 0.0;
            for (double xi : x) acc += std::abs(xi);
            return acc <= tau + tol;
        }
        case DomainKind::simplex_cross_interval: {
            double acc = 0.0;
            for (int i = 0; i + 1 < dim; ++i) {
                if (x[i] < -tol) return false;
                acc += x[i];
            }
            return std::abs(acc - 1.0) <= tol && x.back() >= lo - tol && x.back() <= hi + tol;
        }
        case DomainKind::nuclear_ball: {
            double acc = 0.0;
            for (double xi : x) acc += xi * xi;
            return std::sqrt(acc) <= tau + tol;  // necessary condition only
        }
        case DomainKind::box:
            for (double xi : x)
                if (xi < lo - tol || xi > hi + tol) return false;
            return true;
    }
    return false;
}

Vector DomainSpec::default_point() const {
    Vector x(dim, 0.0);
    switch (kind) {
        case DomainKind::l1_ball:
        case DomainKind::nuclear_ball:
            break;
        case DomainKind::simplex_cross_interval:
            for (int i = 0; i + 1 < dim; ++i) x[i] = 1.0 / (dim - 1);
            x.back() = 0.5 * (lo + hi);
            break;
        case DomainKind::box:
            for (double& xi : x) xi = 0.5 * (lo + hi);
            break;
    }
    return x;
}

Vector DomainSpec::random_vertex(RngState& rng) const {
    Vector x(dim, 0.0);
    switch (kind) {
        case DomainKind::l1_ball: {
            const int i = static_cast<int>(rng.next_u64() % dim);
            x[i] = rng.coin() ? tau : -tau;
            break;
        }
        case DomainKind::simplex_cross_interval: {
            const int i = static_cast<int>(rng.next_u64() % (dim - 1));
            x[i] = 1.0;
            x.back() = rng.coin() ? hi : lo;
            break;
        }
        case DomainKind::nuclear_ball: {
            Vector u(mat_rows), v(mat_cols);
            for (double& e : u) e = rng.normal();
            for (double& e : v) e = rng.normal();
            const double nu = norm2(u), nv = norm2(v);
            for (int i = 0; i < mat_rows; ++i)
                for (int j = 0; j < mat_cols; ++j)
                    x[static_cast<size_t>(i) * mat_cols + j] = tau * (u[i] / nu) * (v[j] / nv);
            break;
        }
        case DomainKind::box:
            for (double& xi : x) xi = rng.coin() ? hi : lo;
            break;
    }
    return x;
}

namespace {

Vector random_simplex_point(int d, RngState& rng) {
    Vector w(d);
    double s = 0.0;
    for (double& e : w) {
        e = -std::log(rng.uniform());
        s += e;
    }
    for (double& e : w) e /= s;
    return w;
}

}  // namespace

Vector DomainSpec::random_interior(RngState& rng) const {
    switch (kind) {
        case DomainKind::l1_ball: {
            Vector w = random_simplex_point(dim, rng);
            const double radius = tau * std::pow(rng.uniform(), 1.0 / dim);
            Vector x(dim);
            for (int i = 0; i < dim; ++i) x[i] = (rng.coin() ? 1.0 : -1.0) * radius * w[i];
            return x;
        }
        case DomainKind::simplex_cross_interval: {
            Vector x = random_simplex_point(dim - 1, rng);
            x.push_back(lo + (hi - lo) * rng.uniform());
            return x;
        }
        case DomainKind::nuclear_ball: {
            // Convex combination of a few rank-1 extreme points.
            Vector weights = random_simplex_point(3, rng);
            Vector x(dim, 0.0);
            const double shrink = rng.uniform();
            for (int k = 0; k < 3; ++k) {
                Vector vtx = random_vertex(rng);
                for (int i = 0; i < dim; ++i) x[i] += shrink * weights[k] * vtx[i];
            }
            return x;
        }
        case DomainKind::box: {
            Vector x(dim);
            for (double& xi : x) xi = lo + (hi - lo) * rng.uniform();
            return x;
        }
    }
    return Vector(dim, 0.0);
}

double ProblemInstance::objective_exact(const Vector& x) const {
    if (!inner.has_exact()) throw ConfigError(name + ": exact oracle not available");
    return outer_eval(outer, inner.exact(x).f, x);
}

// ---------------------------------------------------------------------------
// Noise moment helpers (per-entry absolute moments of the families)

namespace {

double noise_entry_abs_moment(const NoiseSpec& spec, double r) {
    switch (spec.family) {
        case NoiseFamily::none:
            return 0.0;
        case NoiseFamily::gaussian:
            // E|N(0,1)|^r = 2^{r/2} Gamma((r+1)/2) / sqrt(pi)
            return std::pow(spec.scale, r) * std::pow(2.0, r / 2.0) *
                   std::tgamma((r + 1.0) / 2.0) / std::sqrt(M_PI);
        case NoiseFamily::laplace:
            return std::pow(spec.scale, r) * std::tgamma(r + 1.0);
        case NoiseFamily::symmetric_pareto: {
            // No elementary closed form; deterministic Monte Carlo estimate.
            RngState mc(0xC0FFEE42ULL);
            double acc = 0.0;
            const int n = 200000;
            for (int i = 0; i < n; ++i) {
                Vector v = sample_noise_vector(spec, 1, mc);
                acc += std::pow(std::abs(v[0]), r);
            }
            return 1.3 * acc / n;  // headroom: MC estimate, not a certified bound
        }
    }
    return 0.0;
}

// sigma with E||eps||^r <= sigma^r for an i.i.d. noise vector: for r <= 2,
// ||eps||^r = (sum eps_i^2)^{r/2} <= sum |eps_i|^r.
double vector_noise_sigma(const NoiseSpec& spec, int entries, double r) {
    return std::pow(entries * noise_entry_abs_moment(spec, r), 1.0 / r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Robust minimax regression

namespace {

struct MinimaxData {
    std::vector<Matrix> a;   // per group: N_i x d
    std::vector<Vector> b;   // per group: N_i
    int dim = 0;
};

InnerSample minimax_exact_eval(const MinimaxData& data, const Vector& x) {
    const int m = static_cast<int>(data.a.size());
    InnerSample s;
    s.f.assign(m, 0.0);
    s.jac = Matrix(m, data.dim);
    for (int i = 0; i < m; ++i) {
        const Matrix& ai = data.a[i];
        const Vector& bi = data.b[i];
        const int n = ai.rows;
        Vector resid = ai.apply(x) - bi;
        double val = 0.0;
        for (double rj : resid) val += rj * rj;
        s.f[i] = 0.5 * val / n;
        Vector g = ai.apply_transposed(resid);
        for (int j = 0; j < data.dim; ++j) s.jac(i, j) = g[j] / n;
    }
    return s;
}

ProblemInstance build_minimax(std::shared_ptr<MinimaxData> data, double tau,
                              const NoiseSpec& noise, RngState& rng, const std::string& name) {
    noise.validate();
    const int m = static_cast<int>(data->a.size());
    const int d = data->dim;

    ProblemInstance prob;
    prob.name = name;
    prob.outer = OuterFunction::max_of(m);
    prob.domain = DomainSpec::l1_ball(d, tau);
    prob.inner.dim_x = d;
    prob.inner.dim_u = m;

    prob.inner.exact = [data](const Vector& x) { return minimax_exact_eval(*data, x); };

    prob.inner.query = [data, noise, m, d, exact = prob.inner.exact](const Vector& x, RngState& r) {
        // the minibatch draw counts as oracle noise: without a noise spec the
        // query must reproduce the exact oracle bit for bit
        if (noise.family == NoiseFamily::none) return exact(x);
        InnerSample s;
        s.f.assign(m, 0.0);
        s.jac = Matrix(m, d);
        for (int i = 0; i < m; ++i) {
            const Matrix& ai = data->a[i];
            const int j = static_cast<int>(r.next_u64() % ai.rows);
            double resid = -data->b[i][j];
            const double* row = ai.data.data() + static_cast<size_t>(j) * d;
            for (int k = 0; k < d; ++k) resid += row[k] * x[k];
            s.f[i] = 0.5 * resid * resid;
            for (int k = 0; k < d; ++k) s.jac(i, k) = row[k] * resid;
        }
        if (noise.family != NoiseFamily::none) {
            Vector ef = sample_noise_vector(noise, m, r);
            for (int i = 0; i < m; ++i) s.f[i] += ef[i];
            Vector eg = sample_noise_vector(noise, m * d, r);
            for (size_t i = 0; i < s.jac.data.size(); ++i) s.jac.data[i] += eg[i];
        }
        return s;
    };

    prob.inner.hessian_query = [data, m, d](const Vector&, RngState& r) {
        std::vector<Matrix> slices;
        slices.reserve(m);
        for (int i = 0; i < m; ++i) {
            const Matrix& ai = data->a[i];
            const int j = static_cast<int>(r.next_u64() % ai.rows);
            const double* row = ai.data.data() + static_cast<size_t>(j) * d;
            Matrix h(d, d);
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q) h(p, q) = row[p] * row[q];
            slices.push_back(std::move(h));
        }
        return slices;
    };

    // Constants: componentwise smoothness is exact (up to the certified
    // power-iteration bound); G and the noise moments are sampled estimates.
    double l_max = 0.0;
    for (int i = 0; i < m; ++i) {
        const Matrix& ai = data->a[i];
        Matrix h(d, d);
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q) {
                double acc = 0.0;
                for (int row = 0; row < ai.rows; ++row) acc += ai(row, p) * ai(row, q);
                h(p, q) = acc / ai.rows;
            }
        l_max = std::max(l_max, sym_opnorm_upper(h));
    }
    prob.inner.constants.L = l_max;
    prob.inner.constants.r = noise.family == NoiseFamily::none ? 2.0 : noise.moment_order_r;

    double g_max = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Vector x = prob.domain.random_interior(rng);
        InnerSample s = prob.inner.exact(x);
        g_max = std::max(g_max, s.jac.frobenius_norm());
    }
    prob.inner.constants.G = 1.2 * g_max;

    double sf2 = 0.0, sg2 = 0.0;
    for (int point = 0; point < 5; ++point) {
        Vector x = prob.domain.random_interior(rng);
        InnerSample ex = prob.inner.exact(x);
        double af = 0.0, ag = 0.0;
        const int draws = 200;
        for (int t = 0; t < draws; ++t) {
            InnerSample s = prob.inner.query(x, rng);
            Vector df = s.f - ex.f;
            af += dot(df, df);
            Matrix dj = s.jac - ex.jac;
            const double fn = dj.frobenius_norm();
            ag += fn * fn;
        }
        sf2 = std::max(sf2, af / draws);
        sg2 = std::max(sg2, ag / draws);
    }
    prob.inner.constants.sigma_f = 1.2 * std::sqrt(sf2);
    prob.inner.constants.sigma_g = 1.2 * std::sqrt(sg2);
    return prob;
}

}  // namespace

ProblemInstance make_minimax_regression(const MinimaxRegressionParams& p, RngState& rng) {
    if (p.groups < 2 || p.dim < 1 || !(p.tau > 0.0) || p.samples_per_group < 1)
        throw ConfigError("minimax_regression: bad parameters");
    auto data = std::make_shared<MinimaxData>();
    data->dim = p.dim;

    Vector ladder = p.group_noise_scales;
    if (ladder.empty()) {
        ladder.resize(p.groups);
        for (int i = 0; i < p.groups; ++i)
            ladder[i] = p.groups == 1 ? 0.5 : 0.1 + 0.9 * i / (p.groups - 1.0);
    }
    if (static_cast<int>(ladder.size()) != p.groups)
        throw ConfigError("minimax_regression: noise ladder length must equal group count");

    // Shared sparse ground truth inside the ball.
    Vector x_base(p.dim, 0.0);
    const int nnz = std::max(1, std::min(p.dim, p.dim / 5 + 1));
    for (int k = 0; k < nnz; ++k) {
        const int i = static_cast<int>(rng.next_u64() % p.dim);
        x_base[i] = (rng.coin() ? 1.0 : -1.0) * 0.8 * p.tau / nnz;
    }

    for (int i = 0; i < p.groups; ++i) {
        Matrix ai(p.samples_per_group, p.dim);
        Vector bi(p.samples_per_group);
        for (int j = 0; j < p.samples_per_group; ++j) {
            for (int k = 0; k < p.dim; ++k) ai(j, k) = rng.normal();
            bi[j] = dot(ai.row(j), x_base) + ladder[i] * rng.normal();
        }
        data->a.push_back(std::move(ai));
        data->b.push_back(std::move(bi));
    }
    return build_minimax(data, p.tau, p.noise, rng, "minimax_regression");
}

ProblemInstance make_minimax_from_data(const Matrix& features, const Vector& labels, int groups,
                                       double tau, const NoiseSpec& noise, RngState& rng) {
    if (features.rows != static_cast<int>(labels.size()) || features.rows < groups || groups < 2)
        throw ConfigError("minimax_from_data: need at least one row per group");
    // Label-stratified round-robin split.
    std::vector<int> order(features.rows);
    for (int i = 0; i < features.rows; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return labels[a] < labels[b]; });
    auto data = std::make_shared<MinimaxData>();
    data->dim = features.cols;
    std::vector<std::vector<int>> members(groups);
    for (size_t k = 0; k < order.size(); ++k) members[k % groups].push_back(order[k]);
    for (int g = 0; g < groups; ++g) {
        Matrix ai(static_cast<int>(members[g].size()), features.cols);
        Vector bi(members[g].size());
        for (size_t j = 0; j < members[g].size(); ++j) {
            for (int k = 0; k < features.cols; ++k) ai(static_cast<int>(j), k) = features(members[g][j], k);
            bi[j] = labels[members[g][j]];
        }
        data->a.push_back(std::move(ai));
        data->b.push_back(std::move(bi));
    }
    return build_minimax(data, tau, noise, rng, "minimax_from_data");
}

// ---------------------------------------------------------------------------
// CVaR portfolio

ProblemInstance make_cvar_portfolio(const CvarPortfolioParams& p, RngState& rng) {
    if (p.assets < 1 || p.scenarios < 1) throw ConfigError("cvar_portfolio: bad parameters");
    p.noise.validate();
    const int d = p.assets;
    const int n = p.scenarios;

    // Fixed scenario returns with heavy tails; the oracle perturbs them.
    auto returns = std::make_shared<Matrix>(n, d);
    {
        Vector mu(d);
        for (double& v : mu) v = 0.001 + 0.002 * rng.normal();
        NoiseSpec tail = NoiseSpec::pareto(0.02, 2.0);
        for (int t = 0; t < n; ++t) {
            Vector e = sample_noise_vector(tail, d, rng);
            for (int j = 0; j < d; ++j) (*returns)(t, j) = mu[j] + e[j];
        }
    }

    ProblemInstance prob;
    prob.name = "cvar_portfolio";
    prob.outer = OuterFunction::cvar_portfolio(n, p.alpha);
    prob.domain = DomainSpec::simplex_cross_interval(d, -1.0, 1.0);
    prob.inner.dim_x = d + 1;
    prob.inner.dim_u = n;

    auto eval_with = [n, d](const Matrix& r, const Vector& x) {
        InnerSample s;
        s.f.assign(n, 0.0);
        s.jac = Matrix(n, d + 1);
        const double y0 = x[d];
        for (int t = 0; t < n; ++t) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                acc += r(t, j) * x[j];
                s.jac(t, j) = -r(t, j);
            }
            s.f[t] = -acc - y0;
            s.jac(t, d) = -1.0;
        }
        return s;
    };

    prob.inner.exact = [returns, eval_with](const Vector& x) { return eval_with(*returns, x); };
    const NoiseSpec noise = p.noise;
    prob.inner.query = [returns, eval_with, noise, n, d](const Vector& x, RngState& r) {
        if (noise.family == NoiseFamily::none) return eval_with(*returns, x);
        Matrix perturbed = *returns;
        Vector e = sample_noise_vector(noise, n * d, r);
        for (size_t i = 0; i < perturbed.data.size(); ++i) perturbed.data[i] += e[i];
        return eval_with(perturbed, x);
    };

    prob.inner.constants.L = 0.0;  // affine inner map
    double fro2 = 0.0;
    for (int t = 0; t < n; ++t) {
        const Vector rt = returns->row(t);
        fro2 += dot(rt, rt) + 1.0;
    }
    prob.inner.constants.G = std::sqrt(fro2);
    prob.inner.constants.r = noise.family == NoiseFamily::none ? 2.0 : noise.moment_order_r;
    prob.inner.constants.sigma_f = vector_noise_sigma(noise, n, prob.inner.constants.r);
    prob.inner.constants.sigma_g = vector_noise_sigma(noise, n * d, prob.inner.constants.r);
    return prob;
}

// ---------------------------------------------------------------------------
// Robust matrix completion

ProblemInstance make_matrix_completion(const MatrixCompletionParams& p, RngState& rng) {
    if (p.rank < 1 || p.rank > std::min(p.rows, p.cols) || !(p.density > 0.0 && p.density <= 1.0))
        throw ConfigError("matrix_completion: bad parameters");
    p.noise.validate();
    const int rc = p.rows * p.cols;
    const int n_obs = static_cast<int>(std::floor(p.density * rc));
    if (n_obs < 1) throw ConfigError("matrix_completion: density yields an empty observation set");

    Matrix pfac(p.rows, p.rank), qfac(p.cols, p.rank);
    for (double& v : pfac.data) v = rng.normal() / std::sqrt(static_cast<double>(p.rank));
    for (double& v : qfac.data) v = rng.normal();
    auto truth = std::make_shared<Vector>(rc, 0.0);
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < p.rank; ++k) acc += pfac(i, k) * qfac(j, k);
            (*truth)[static_cast<size_t>(i) * p.cols + j] = acc;
        }

    auto mask = std::make_shared<std::vector<int>>(rc);
    for (int i = 0; i < rc; ++i) (*mask)[i] = i;
    for (int i = rc - 1; i > 0; --i)
        std::swap((*mask)[i], (*mask)[rng.next_u64() % (i + 1)]);
    mask->resize(n_obs);
    std::sort(mask->begin(), mask->end());

    ProblemInstance prob;
    prob.name = "matrix_completion";
    prob.outer = OuterFunction::l1_mean(n_obs);
    prob.domain = DomainSpec::nuclear_ball(p.rows, p.cols, p.tau);
    prob.inner.dim_x = rc;
    prob.inner.dim_u = n_obs;

    auto jac = std::make_shared<Matrix>(n_obs, rc);
    for (int k = 0; k < n_obs; ++k) (*jac)(k, (*mask)[k]) = 1.0;

    prob.inner.exact = [truth, mask, jac, n_obs](const Vector& x) {
        InnerSample s;
        s.f.assign(n_obs, 0.0);
        for (int k = 0; k < n_obs; ++k) s.f[k] = x[(*mask)[k]] - (*truth)[(*mask)[k]];
        s.jac = *jac;
        return s;
    };
    const NoiseSpec noise = p.noise;
    prob.inner.query = [truth, mask, jac, noise, n_obs](const Vector& x, RngState& r) {
        InnerSample s;
        s.f.assign(n_obs, 0.0);
        Vector e = noise.family == NoiseFamily::none ? Vector(n_obs, 0.0)
                                                     : sample_noise_vector(noise, n_obs, r);
        for (int k = 0; k < n_obs; ++k) s.f[k] = x[(*mask)[k]] - ((*truth)[(*mask)[k]] + e[k]);
        s.jac = *jac;
        return s;
    };

    prob.inner.constants.L = 0.0;
    prob.inner.constants.G = 1.0;  // distinct basis rows
    prob.inner.constants.r = noise.family == NoiseFamily::none ? 2.0 : noise.moment_order_r;
    prob.inner.constants.sigma_f = vector_noise_sigma(noise, n_obs, prob.inner.constants.r);
    prob.inner.constants.sigma_g = 0.0;
    return prob;
}

// ---------------------------------------------------------------------------
// Controlled quadratic family

ProblemInstance make_custom_quadratic(const CustomQuadraticParams& p, RngState& rng) {
    if (p.dim < 1 || p.components < 1 || !(p.tau > 0.0))
        throw ConfigError("custom_quadratic: bad parameters");
    p.noise.validate();
    const int d = p.dim;
    const int n = p.components;

    struct QuadData {
        std::vector<Matrix> q;
        std::vector<Vector> b;
        Vector c;
    };
    auto data = std::make_shared<QuadData>();
    data->c.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        Matrix q(d, d);
        if (p.convex) {
            Matrix c(d, d);
            for (double& v : c.data) v = rng.normal() / std::sqrt(static_cast<double>(d));
            for (int a = 0; a < d; ++a)
                for (int bcol = 0; bcol < d; ++bcol) {
                    double acc = 0.0;
                    for (int k = 0; k < d; ++k) acc += c(k, a) * c(k, bcol);
                    q(a, bcol) = acc;
                }
        } else {
            for (int a = 0; a < d; ++a)
                for (int bcol = a; bcol < d; ++bcol) {
                    const double v = rng.normal() / std::sqrt(static_cast<double>(d));
                    q(a, bcol) = v;
                    q(bcol, a) = v;
                }
        }
        data->q.push_back(std::move(q));
        Vector bi(d);
        for (double& v : bi) v = 0.5 * rng.normal();
        data->b.push_back(std::move(bi));
        data->c[i] = 0.3 * rng.normal();
    }

    ProblemInstance prob;
    prob.name = p.convex ? "custom_quadratic_convex" : "custom_quadratic_indefinite";
    prob.outer = OuterFunction::max_of(n);
    prob.domain = DomainSpec::l1_ball(d, p.tau);
    prob.inner.dim_x = d;
    prob.inner.dim_u = n;

    auto exact_eval = [data, n, d](const Vector& x) {
        InnerSample s;
        s.f.assign(n, 0.0);
        s.jac = Matrix(n, d);
        for (int i = 0; i < n; ++i) {
            Vector qx = data->q[i].apply(x);
            s.f[i] = 0.5 * dot(x, qx) + dot(data->b[i], x) + data->c[i];
            for (int j = 0; j < d; ++j) s.jac(i, j) = qx[j] + data->b[i][j];
        }
        return s;
    };
    prob.inner.exact = exact_eval;

    const NoiseSpec noise = p.noise;
    prob.inner.query = [exact_eval, noise, n, d](const Vector& x, RngState& r) {
        InnerSample s = exact_eval(x);
        if (noise.family != NoiseFamily::none) {
            Vector ef = sample_noise_vector(noise, n, r);
            for (int i = 0; i < n; ++i) s.f[i] += ef[i];
            Vector eg = sample_noise_vector(noise, n * d, r);
            for (size_t i = 0; i < s.jac.data.size(); ++i) s.jac.data[i] += eg[i];
        }
        return s;
    };

    const double hscale = p.hessian_noise_scale;
    prob.inner.hessian_query = [data, hscale, n, d](const Vector&, RngState& r) {
        std::vector<Matrix> slices;
        slices.reserve(n);
        for (int i = 0; i < n; ++i) {
            Matrix h = data->q[i];
            if (hscale > 0.0)
                for (double& v : h.data) v += hscale * r.normal();
            slices.push_back(std::move(h));
        }
        return slices;
    };

    double l2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double li = sym_opnorm_upper(data->q[i]);
        l2 += li * li;
    }
    prob.inner.constants.L = std::sqrt(l2);

    // Frobenius norm of the Jacobian is convex in x, so its maximum over the
    // ball sits at a vertex; enumerate the 2d of them.
    double g2 = 0.0;
    for (int j = 0; j < 2 * d; ++j) {
        Vector v(d, 0.0);
        v[j / 2] = (j % 2 == 0 ? 1.0 : -1.0) * p.tau;
        InnerSample s = exact_eval(v);
        const double fn = s.jac.frobenius_norm();
        g2 = std::max(g2, fn * fn);
    }
    prob.inner.constants.G = std::sqrt(g2);

    prob.inner.constants.r = noise.family == NoiseFamily::none ? 2.0 : noise.moment_order_r;
    prob.inner.constants.sigma_f = vector_noise_sigma(noise, n, prob.inner.constants.r);
    prob.inner.constants.sigma_g = vector_noise_sigma(noise, n * d, prob.inner.constants.r);
    if (hscale > 0.0)
        prob.inner.constants.sigma_H = hscale * d * std::sqrt(static_cast<double>(n));
    return prob;
}

// ---------------------------------------------------------------------------
// LIBSVM text format

LibsvmData load_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("libsvm: cannot open " + path);
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> labels;
    std::string line;
    int max_index = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line
        double label;
        try {
            size_t used = 0;
            label = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("libsvm: line " + std::to_string(line_no) + ": bad label '" + tok + "'");
        }
        std::vector<std::pair<int, double>> row;
        while (ls >> tok) {
            const size_t colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
                throw ParseError("libsvm: line " + std::to_string(line_no) +
                                 ": expected index:value, got '" + tok + "'");
            int idx;
            double val;
            try {
                size_t used = 0;
                idx = std::stoi(tok.substr(0, colon), &used);
                if (used != colon) throw std::invalid_argument(tok);
                val = std::stod(tok.substr(colon + 1), &used);
                if (used != tok.size() - colon - 1) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError("libsvm: line " + std::to_string(line_no) +
                                 ": bad index:value token '" + tok + "'");
            }
            if (idx < 1)
                throw ParseError("libsvm: line " + std::to_string(line_no) +
                                 ": indices are 1-based, got " + std::to_string(idx));
            row.emplace_back(idx, val);
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    if (rows.empty()) throw ConfigError("libsvm: no data rows in " + path);

    LibsvmData out;
    out.features = Matrix(static_cast<int>(rows.size()), max_index);
    out.labels.assign(labels.begin(), labels.end());
    for (size_t i = 0; i < rows.size(); ++i)
        for (const auto& [idx, val] : rows[i]) out.features(static_cast<int>(i), idx - 1) = val;
    return out;
}

void save_libsvm(const std::string& path, const Matrix& features, const Vector& labels) {
    if (features.rows != static_cast<int>(labels.size()))
        throw ConfigError("libsvm: row/label count mismatch");
    std::ofstream out(path);
    if (!out) throw ConfigError("libsvm: cannot write " + path);
    out.precision(17);
    for (int i = 0; i < features.rows; ++i) {
        out << labels[i];
        for (int j = 0; j < features.cols; ++j)
            if (features(i, j) != 0.0) out << ' ' << (j + 1) << ':' << features(i, j);
        out << '\n';
    }
}

}  // namespace compfw
