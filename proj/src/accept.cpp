#include "compfw/accept.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "compfw/experiment.hpp"
#include "compfw/metrics.hpp"
#include "compfw/solver.hpp"

namespace compfw {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Task-1-small: the controlled minimax instance behind the rate criteria.
ProblemInstance task1_small() {
    MinimaxRegressionParams p;
    p.groups = 5;
    p.dim = 20;
    p.tau = 2.0;
    p.samples_per_group = 50;
    p.noise = NoiseSpec::gaussian(0.5);
    RngState rng(42);
    return make_minimax_regression(p, rng);
}

struct Harness {
    bool fast = false;
    std::vector<CriterionResult> results;
    double min_raw_gap = 0.0;  // most negative recorded gap across all runs
    int64_t gap_rows = 0;

    void track(const RunRecord& rec) {
        for (const TraceRow& row : rec.rows) {
            if (std::isnan(row.gap)) continue;
            ++gap_rows;
            min_raw_gap = std::min(min_raw_gap, row.gap);
        }
    }

    void add(int index, const std::string& name, bool pass, const std::string& detail) {
        results.push_back({index, name, pass, detail});
    }
};

// Running min of the exact objective over a trace.
double min_objective(const RunRecord& rec) {
    double best = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : rec.rows) best = std::min(best, row.objective);
    return best;
}

double final_objective(const RunRecord& rec) { return rec.rows.back().objective; }

// ---------------------------------------------------------------------------
// 1. Non-convex rate exponent

void criterion_rate(Harness& h) {
    const ProblemInstance problem = task1_small();
    const std::vector<int> k_grid =
        h.fast ? std::vector<int>{64, 128, 256, 512} : std::vector<int>{256, 512, 1024, 2048, 4096};
    const int n_seeds = h.fast ? 5 : 10;

    std::vector<std::pair<double, double>> points;
    for (int k : k_grid) {
        double mean = 0.0;
        for (int s = 1; s <= n_seeds; ++s) {
            SolverConfig cfg;
            cfg.variant = SolverVariant::variant2;
            cfg.schedule = Schedule::nonconvex(2.0);
            cfg.iterations = k;
            cfg.seed = static_cast<uint64_t>(s);
            const RunRecord rec = run(problem, cfg);
            h.track(rec);
            mean += rec.min_gap;
        }
        points.emplace_back(static_cast<double>(k), mean / n_seeds);
    }
    const RateFit fit = fit_rate(points);
    const double lo = h.fast ? -0.55 : -0.40;
    const double hi = h.fast ? -0.05 : -0.12;
    const double r2_min = h.fast ? 0.70 : 0.85;
    const bool pass = fit.slope >= lo && fit.slope <= hi && fit.r_squared >= r2_min;
    h.add(1, "nonconvex rate exponent (taylor variant)", pass,
          "slope=" + fmt(fit.slope) + " in [" + fmt(lo) + "," + fmt(hi) + "], r2=" +
              fmt(fit.r_squared) + " >= " + fmt(r2_min));
}

// ---------------------------------------------------------------------------
// 2. Deterministic convex bound

ProblemInstance convex_quadratic_instance() {
    CustomQuadraticParams p;
    p.dim = 4;
    p.components = 3;
    p.tau = 1.0;
    p.convex = true;
    p.noise = NoiseSpec::none();
    RngState rng(7);
    return make_custom_quadratic(p, rng);
}

double cached_reference_minimum(const ProblemInstance& problem, const char* key) {
    static std::map<std::string, double> cache;
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    SolverConfig cfg;
    cfg.variant = SolverVariant::deterministic_basic;
    cfg.schedule = Schedule::deterministic_convex();
    cfg.iterations = 100000;
    const RunRecord rec = run(problem, cfg);
    const double ref = min_objective(rec);
    cache[key] = ref;
    return ref;
}

void criterion_convex_interpolation(Harness& h) {
    const ProblemInstance problem = convex_quadratic_instance();
    const double s_bound = problem.outer.lipschitz_LF * problem.inner.constants.L *
                           problem.domain.diameter * problem.domain.diameter *
                           std::sqrt(static_cast<double>(problem.inner.dim_u));
    const double phi_star = cached_reference_minimum(problem, "convex_quadratic_7");

    bool pass = true;
    std::string detail;
    for (int k : {10, 50, 100, 500}) {
        SolverConfig cfg;
        cfg.variant = SolverVariant::deterministic_basic;
        cfg.schedule = Schedule::deterministic_convex();
        cfg.iterations = k;
        const RunRecord rec = run(problem, cfg);
        h.track(rec);
        const double lhs = final_objective(rec) - phi_star;
        const double rhs = 2.0 * s_bound / (k + 1.0);
        if (!(lhs <= rhs + 1e-10)) pass = false;
        detail += "K=" + std::to_string(k) + ":" + fmt(lhs) + "<=" + fmt(rhs) + " ";
    }
    h.add(2, "deterministic convex bound 2S/(K+1)", pass, detail);
}

// ---------------------------------------------------------------------------
// 3. Deterministic non-convex bound

// Two-stage dense grid minimum of the exact objective over a 2-d l1 ball.
double grid_min_l1_2d(const ProblemInstance& problem, double coarse) {
    const double tau = problem.domain.tau;
    double best = std::numeric_limits<double>::infinity();
    Vector arg(2, 0.0);
    Vector x(2, 0.0);
    for (double a = -tau; a <= tau + 1e-12; a += coarse) {
        const double rem = tau - std::abs(a);
        for (double b = -rem; b <= rem + 1e-12; b += coarse) {
            x[0] = a;
            x[1] = b;
            const double v = problem.objective_exact(x);
            if (v < best) {
                best = v;
                arg = x;
            }
        }
    }
    const double fine = coarse / 50.0;
    for (double a = arg[0] - 2 * coarse; a <= arg[0] + 2 * coarse; a += fine)
        for (double b = arg[1] - 2 * coarse; b <= arg[1] + 2 * coarse; b += fine) {
            if (std::abs(a) + std::abs(b) > tau) continue;
            x[0] = a;
            x[1] = b;
            best = std::min(best, problem.objective_exact(x));
        }
    return best;
}

void criterion_nonconvex_interpolation(Harness& h) {
    CustomQuadraticParams p;
    p.dim = 2;
    p.components = 2;
    p.tau = 1.0;
    p.convex = false;
    RngState rng(11);
    const ProblemInstance problem = make_custom_quadratic(p, rng);
    const double s_bound = problem.outer.lipschitz_LF * problem.inner.constants.L *
                           problem.domain.diameter * problem.domain.diameter *
                           std::sqrt(static_cast<double>(problem.inner.dim_u));

    double phi_star = grid_min_l1_2d(problem, 2e-3);
    std::vector<RunRecord> runs;
    for (int k : {100, 1000}) {
        SolverConfig cfg;
        cfg.variant = SolverVariant::deterministic_basic;
        cfg.schedule = Schedule::deterministic_nonconvex();
        cfg.iterations = k;
        cfg.record_every = 1;
        runs.push_back(run(problem, cfg));
        h.track(runs.back());
        phi_star = std::min(phi_star, min_objective(runs.back()));
    }

    const double phi0 = problem.objective_exact(problem.domain.default_point()) - phi_star;
    bool pass = true;
    std::string detail;
    const int ks[] = {100, 1000};
    for (size_t i = 0; i < runs.size(); ++i) {
        const int k = ks[i];
        double min_gap = std::numeric_limits<double>::infinity();
        for (const TraceRow& row : runs[i].rows) min_gap = std::min(min_gap, row.gap);
        const double rhs = (phi0 + 0.5 * s_bound * (1.0 + std::log(k + 1.0))) / std::sqrt(k + 1.0);
        if (!(min_gap <= rhs + 1e-10)) pass = false;
        detail += "K=" + std::to_string(k) + ":" + fmt(min_gap) + "<=" + fmt(rhs) + " ";
    }
    h.add(3, "deterministic nonconvex bound (Phi0 + S(1+ln(K+1))/2)/sqrt(K+1)", pass, detail);
}

// ---------------------------------------------------------------------------
// 4. Oracle equivalence against brute force

struct GridCheck {
    double worst = 0.0;  // max |oracle - grid| over instances, in tolerance units
    int failures = 0;
    int instances = 0;

    void feed(double oracle_value, double grid_value, double tol) {
        ++instances;
        const double err = std::abs(oracle_value - grid_value);
        worst = std::max(worst, tol > 0 ? err / tol : err);
        if (err > tol) ++failures;
    }
};

AffineSurrogate random_surrogate(int n, int d, const DomainSpec& domain, RngState& rng,
                                 double row_cap = 1.0) {
    AffineSurrogate s;
    s.z.resize(n);
    for (double& v : s.z) v = rng.normal();
    s.v = Matrix(n, d);
    for (int i = 0; i < n; ++i) {
        Vector row(d);
        for (double& v : row) v = rng.normal();
        const double scale = std::max(1.0, norm2(row) / row_cap);
        for (int j = 0; j < d; ++j) s.v(i, j) = row[j] / scale;
    }
    s.anchor = domain.random_interior(rng);
    return s;
}

void criterion_oracles(Harness& h) {
    RngState rng(404);
    const int per_family = h.fast ? 40 : 100;
    GridCheck max_check, cvar_check, comp_check;

    // max-affine over the l1 ball vs a lattice sweep
    for (int t = 0; t < per_family; ++t) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        const DomainSpec domain = DomainSpec::l1_ball(d, 1.0);
        const AffineSurrogate s = random_surrogate(n, d, domain, rng);
        const GlmoResult res = glmo_max_affine(s, domain);
        const double hstep = d == 1 ? 1e-3 : (d == 2 ? 5e-3 : 2.5e-2);
        double best = std::numeric_limits<double>::infinity();
        Vector x(d, 0.0);
        const auto sweep = [&](auto&& self, int coord, double budget) -> void {
            if (coord == d - 1) {
                for (double v = -budget; v <= budget + 1e-12; v += hstep) {
                    x[coord] = v;
                    best = std::min(best, outer_eval(OuterFunction::max_of(n), s.eval(x), x));
                }
                return;
            }
            for (double v = -budget; v <= budget + 1e-12; v += hstep) {
                x[coord] = v;
                self(self, coord + 1, budget - std::abs(v));
            }
        };
        sweep(sweep, 0, 1.0);
        max_check.feed(res.surrogate_value, best, 3.0 * hstep * std::sqrt(static_cast<double>(d)));
    }

    // cvar LP vs simplex x interval grid
    for (int t = 0; t < per_family; ++t) {
        const int ds = 2 + static_cast<int>(rng.next_u64() % 2);
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        const double alpha = 0.5 + 0.4 * rng.uniform();
        const DomainSpec domain = DomainSpec::simplex_cross_interval(ds, -1.0, 1.0);
        const AffineSurrogate s = random_surrogate(n, ds + 1, domain, rng);
        const GlmoResult res = glmo_cvar(s, domain, alpha);
        const double hs = ds == 2 ? 1.0 / 200 : 1.0 / 40;
        const double hy = ds == 2 ? 1.0 / 250 : 1.0 / 125;
        const OuterFunction outer = OuterFunction::cvar_portfolio(n, alpha);
        double best = std::numeric_limits<double>::infinity();
        Vector x(ds + 1, 0.0);
        const auto sweep = [&](auto&& self, int coord, double budget) -> void {
            if (coord == ds - 1) {
                x[coord] = budget;  // simplex closes the mass exactly
                for (double y0 = -1.0; y0 <= 1.0 + 1e-12; y0 += 2.0 * hy) {
                    x[ds] = y0;
                    best = std::min(best, outer_eval(outer, s.eval(x), x));
                }
                return;
            }
            for (double v = 0.0; v <= budget + 1e-12; v += hs) {
                x[coord] = v;
                self(self, coord + 1, budget - v);
            }
        };
        sweep(sweep, 0, 1.0);
        // value modulus of the grid: 1-Lipschitz rows through the hinge sum
        const double lip = 1.0 + 1.0 / (1.0 - alpha);
        cvar_check.feed(res.surrogate_value, best, 3.0 * lip * std::max(hs, 2.0 * hy));
    }

    // composite oracle over a box vs lattice
    for (int t = 0; t < per_family; ++t) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        const DomainSpec domain = DomainSpec::box(d, -1.0, 1.0);
        const AffineSurrogate s = random_surrogate(1, d, domain, rng);
        const bool with_penalty = rng.coin();
        const double lambda = with_penalty ? 0.3 + 0.4 * rng.uniform() : 0.0;
        const RegularizerKind reg =
            with_penalty ? RegularizerKind::l1_penalty : RegularizerKind::zero;
        const GlmoResult res = glmo_composite(s, domain, reg, lambda);
        const double hstep = d <= 2 ? 1e-2 : 4e-2;
        const OuterFunction outer = OuterFunction::composite(reg, lambda);
        double best = std::numeric_limits<double>::infinity();
        Vector x(d, 0.0);
        const auto sweep = [&](auto&& self, int coord) -> void {
            for (double v = -1.0; v <= 1.0 + 1e-12; v += hstep) {
                x[coord] = v;
                if (coord == d - 1)
                    best = std::min(best, outer_eval(outer, s.eval(x), x));
                else
                    self(self, coord + 1);
            }
        };
        sweep(sweep, 0);
        const double lip = 1.0 + lambda * std::sqrt(static_cast<double>(d));
        comp_check.feed(res.surrogate_value, best, 3.0 * lip * hstep);
    }

    // LP against exhaustive vertex enumeration
    int lp_fail = 0, lp_done = 0, lp_status_mismatch = 0, lp_optimal = 0;
    const int lp_target = h.fast ? 80 : 200;
    for (int t = 0; t < 3 * lp_target && lp_optimal < lp_target; ++t) {
        const int nv = 2 + static_cast<int>(rng.next_u64() % 4);   // <= 5
        const int nc = 1 + static_cast<int>(rng.next_u64() % 6);   // <= 6
        LinearProgram lp;
        lp.objective.resize(nv);
        for (double& v : lp.objective) v = rng.normal();
        lp.constraints = Matrix(nc, nv);
        for (double& v : lp.constraints.data) v = rng.normal();
        lp.rhs.resize(nc);
        for (double& v : lp.rhs) v = 0.5 + rng.uniform();
        lp.sense.assign(nc, RowSense::le);
        if (nc >= 2 && rng.coin()) lp.sense[0] = RowSense::eq;
        lp.lower.assign(nv, -1.0);
        lp.upper.assign(nv, 1.0);

        const LpSolution sol = solve_lp(lp);
        // enumeration oracle: all vertex candidates from active-set choices
        double best = std::numeric_limits<double>::infinity();
        bool feasible = false;
        std::vector<std::pair<Vector, double>> planes;  // normal, offset
        for (int i = 0; i < nc; ++i) planes.emplace_back(lp.constraints.row(i), lp.rhs[i]);
        for (int j = 0; j < nv; ++j) {
            Vector e(nv, 0.0);
            e[j] = 1.0;
            planes.emplace_back(e, lp.upper[j]);
            Vector e2(nv, 0.0);
            e2[j] = -1.0;
            planes.emplace_back(e2, -lp.lower[j]);
        }
        std::vector<int> pick(nv, 0);
        const int np = static_cast<int>(planes.size());
        const auto try_vertex = [&](const std::vector<int>& idx) {
            Matrix a(nv, nv);
            Vector b(nv);
            for (int r = 0; r < nv; ++r) {
                for (int c = 0; c < nv; ++c) a(r, c) = planes[idx[r]].first[c];
                b[r] = planes[idx[r]].second;
            }
            // gaussian elimination
            for (int c = 0; c < nv; ++c) {
                int piv = c;
                for (int r = c + 1; r < nv; ++r)
                    if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
                if (std::abs(a(piv, c)) < 1e-10) return;
                if (piv != c) {
                    for (int cc = 0; cc < nv; ++cc) std::swap(a.data[piv * nv + cc], a.data[c * nv + cc]);
                    std::swap(b[piv], b[c]);
                }
                for (int r = c + 1; r < nv; ++r) {
                    const double f = a(r, c) / a(c, c);
                    for (int cc = c; cc < nv; ++cc) a(r, cc) -= f * a(c, cc);
                    b[r] -= f * b[c];
                }
            }
            Vector x(nv);
            for (int c = nv - 1; c >= 0; --c) {
                double acc = b[c];
                for (int cc = c + 1; cc < nv; ++cc) acc -= a(c, cc) * x[cc];
                x[c] = acc / a(c, c);
            }
            for (int i = 0; i < nc; ++i) {
                const double lhs = dot(lp.constraints.row(i), x);
                if (lp.sense[i] == RowSense::eq ? std::abs(lhs - lp.rhs[i]) > 1e-7
                                                : lhs > lp.rhs[i] + 1e-7)
                    return;
            }
            for (int j = 0; j < nv; ++j)
                if (x[j] < lp.lower[j] - 1e-7 || x[j] > lp.upper[j] + 1e-7) return;
            feasible = true;
            best = std::min(best, dot(lp.objective, x));
        };
        std::vector<int> idx;
        const auto combos = [&](auto&& self, int start) -> void {
            if (static_cast<int>(idx.size()) == nv) {
                bool eq_ok = true;
                for (int i = 0; i < nc; ++i)
                    if (lp.sense[i] == RowSense::eq &&
                        std::find(idx.begin(), idx.end(), i) == idx.end())
                        eq_ok = false;
                if (eq_ok) try_vertex(idx);
                return;
            }
            for (int i = start; i < np; ++i) {
                idx.push_back(i);
                self(self, i + 1);
                idx.pop_back();
            }
        };
        combos(combos, 0);

        ++lp_done;
        if (!feasible) {
            if (sol.status != LpStatus::infeasible) ++lp_status_mismatch;
            continue;
        }
        if (sol.status != LpStatus::optimal) {
            ++lp_status_mismatch;
            continue;
        }
        ++lp_optimal;
        if (std::abs(sol.objective_value - best) > 1e-8) ++lp_fail;
    }

    const bool pass = max_check.failures == 0 && cvar_check.failures == 0 &&
                      comp_check.failures == 0 && lp_fail == 0 && lp_status_mismatch == 0;
    h.add(4, "oracle equivalence vs brute force", pass,
          "max-affine worst=" + fmt(max_check.worst) + "x tol, cvar worst=" +
              fmt(cvar_check.worst) + "x, composite worst=" + fmt(comp_check.worst) + "x, lp " +
              std::to_string(lp_done - lp_fail - lp_status_mismatch) + "/" +
              std::to_string(lp_done));
}

// ---------------------------------------------------------------------------
// 5. Tracker moment bounds

ProblemInstance controlled_quadratic() {
    CustomQuadraticParams p;
    p.dim = 5;
    p.components = 2;
    p.tau = 1.0;
    p.convex = true;
    p.noise = NoiseSpec::gaussian(0.3);
    RngState rng(21);
    return make_custom_quadratic(p, rng);
}

void criterion_tracker_bounds(Harness& h) {
    const ProblemInstance problem = controlled_quadratic();
    const InnerConstants& ic = problem.inner.constants;
    const double d_x = problem.domain.diameter;
    const double sigma_f2 = ic.sigma_f * ic.sigma_f;
    const double sigma_g2 = ic.sigma_g * ic.sigma_g;
    const double l = ic.L;
    const double g = *ic.G;

    const int total_k = 128;
    const double gamma = std::pow(static_cast<double>(total_k), -0.75);
    const double beta = std::pow(static_cast<double>(total_k), -0.5);
    const int n_seeds = h.fast ? 20 : 50;
    const std::vector<int> checkpoints{10, 100};

    // mean squared tracking errors per step, for both variants
    std::vector<double> g_sq(total_k + 1, 0.0), f1_sq(total_k + 1, 0.0), f2_sq(total_k + 1, 0.0);
    for (int s = 1; s <= n_seeds; ++s) {
        for (const SolverVariant variant : {SolverVariant::variant1, SolverVariant::variant2}) {
            SolverConfig cfg;
            cfg.variant = variant;
            cfg.schedule = Schedule::custom_constant(gamma, beta, beta);
            cfg.iterations = total_k;
            cfg.seed = static_cast<uint64_t>(s);
            cfg.record_every = 1;
            const RunRecord rec = run(problem, cfg);
            h.track(rec);
            for (const TraceRow& row : rec.rows) {
                if (row.k > total_k) continue;
                if (variant == SolverVariant::variant1) {
                    g_sq[row.k] += row.delta_g_norm * row.delta_g_norm / n_seeds;
                    f1_sq[row.k] += row.delta_f_norm * row.delta_f_norm / n_seeds;
                } else {
                    f2_sq[row.k] += row.delta_f_norm * row.delta_f_norm / n_seeds;
                }
            }
        }
    }

    bool pass = true;
    std::string detail;
    for (int k : checkpoints) {
        const double decay_g = std::pow(1.0 - beta, 2.0 * k);
        const double rhs_g =
            3.0 * (decay_g * sigma_g2 + l * l * d_x * d_x * gamma * gamma / (beta * beta) +
                   sigma_g2 * beta);
        const double rhs_f1 =
            3.0 * (decay_g * sigma_f2 + g * g * d_x * d_x * gamma * gamma / (beta * beta) +
                   sigma_f2 * beta);
        double max_gi = 0.0;
        for (int i = 1; i <= k; ++i) max_gi = std::max(max_gi, g_sq[i]);
        const double rhs_f2 =
            4.0 * (decay_g * sigma_f2 +
                   l * l * std::pow(d_x, 4.0) * std::pow(gamma, 4.0) / (4.0 * beta * beta) +
                   d_x * d_x * gamma * gamma / (beta * beta) * max_gi + sigma_f2 * beta);
        if (!(g_sq[k] <= rhs_g) || !(f1_sq[k] <= rhs_f1) || !(f2_sq[k] <= rhs_f2)) pass = false;
        detail += "k=" + std::to_string(k) + ": jac " + fmt(g_sq[k]) + "<=" + fmt(rhs_g) +
                  ", fn-polyak " + fmt(f1_sq[k]) + "<=" + fmt(rhs_f1) + ", fn-taylor " +
                  fmt(f2_sq[k]) + "<=" + fmt(rhs_f2) + "; ";
    }
    h.add(5, "tracker second-moment bounds", pass, detail);
}

// ---------------------------------------------------------------------------
// 6. Second-order estimators

ProblemInstance cubic_test_problem(double hessian_noise, RngState& rng) {
    const int d = 3, n = 2;
    struct Cubic {
        std::vector<Vector> w;
        std::vector<Matrix> q;
    };
    auto data = std::make_shared<Cubic>();
    for (int i = 0; i < n; ++i) {
        Vector w(d);
        for (double& v : w) v = rng.normal();
        data->w.push_back(w);
        Matrix q(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                const double v = 0.3 * rng.normal();
                q(a, b) = v;
                q(b, a) = v;
            }
        data->q.push_back(q);
    }

    ProblemInstance prob;
    prob.name = "cubic_test";
    prob.outer = OuterFunction::max_of(n);
    prob.domain = DomainSpec::l1_ball(d, 1.0);
    prob.inner.dim_x = d;
    prob.inner.dim_u = n;
    prob.inner.exact = [data, n, d](const Vector& x) {
        InnerSample s;
        s.f.assign(n, 0.0);
        s.jac = Matrix(n, d);
        for (int i = 0; i < n; ++i) {
            const double t = dot(data->w[i], x);
            const Vector qx = data->q[i].apply(x);
            s.f[i] = t * t * t / 6.0 + 0.5 * dot(x, qx);
            for (int j = 0; j < d; ++j) s.jac(i, j) = 0.5 * t * t * data->w[i][j] + qx[j];
        }
        return s;
    };
    prob.inner.query = [exact = prob.inner.exact](const Vector& x, RngState&) { return exact(x); };
    prob.inner.hessian_query = [data, hessian_noise, n, d](const Vector& x, RngState& r) {
        std::vector<Matrix> slices;
        for (int i = 0; i < n; ++i) {
            const double t = dot(data->w[i], x);
            Matrix hmat = data->q[i];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) hmat(a, b) += t * data->w[i][a] * data->w[i][b];
            if (hessian_noise > 0.0)
                for (double& v : hmat.data) v += hessian_noise * r.normal();
            slices.push_back(std::move(hmat));
        }
        return slices;
    };
    return prob;
}

void criterion_second_order(Harness& h) {
    RngState rng(600);
    // (a) Monte Carlo unbiasedness of the averaged Hessian-vector correction
    const ProblemInstance cubic = cubic_test_problem(0.05, rng);
    const Vector y_prev = cubic.domain.random_interior(rng);
    const Vector y_k = cubic.domain.random_interior(rng);
    const Vector displacement = y_k - y_prev;
    const InnerSample exact_k = cubic.inner.exact(y_k);
    const InnerSample exact_prev = cubic.inner.exact(y_prev);
    const int n = cubic.inner.dim_u, d = cubic.inner.dim_x;
    const int draws = h.fast ? 3000 : 10000;
    Matrix mean(n, d), m2(n, d);
    for (int t = 0; t < draws; ++t) {
        const double alpha = rng.uniform();
        const Vector y_alpha = axpy(y_prev, alpha, displacement);
        const std::vector<Matrix> slices = cubic.inner.hessian_query(y_alpha, rng);
        for (int i = 0; i < n; ++i) {
            const Vector corr = slices[i].apply(displacement);
            for (int j = 0; j < d; ++j) {
                mean(i, j) += corr[j] / draws;
                m2(i, j) += corr[j] * corr[j] / draws;
            }
        }
    }
    bool unbiased = true;
    double worst_z = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const double target = exact_k.jac(i, j) - exact_prev.jac(i, j);
            const double var = std::max(0.0, m2(i, j) - mean(i, j) * mean(i, j));
            const double se = std::sqrt(var / draws) + 1e-12;
            const double z = std::abs(mean(i, j) - target) / se;
            worst_z = std::max(worst_z, z);
            if (z > 3.0) unbiased = false;
        }

    // (b) Hessian-noise moment implies average smoothness
    bool avg_smooth = true;
    double worst_ratio = 0.0;
    {
        const int dd = 6;
        Matrix c(dd, dd);
        for (double& v : c.data) v = rng.normal() / std::sqrt(static_cast<double>(dd));
        Matrix q(dd, dd);
        for (int a = 0; a < dd; ++a)
            for (int b = 0; b < dd; ++b) {
                double acc = 0.0;
                for (int k = 0; k < dd; ++k) acc += c(k, a) * c(k, b);
                q(a, b) = acc;
            }
        const double l_q = sym_opnorm_upper(q);
        const double sigma_h = 0.4;
        const int pairs = h.fast ? 300 : 1000;
        const int inner_draws = 200;
        for (int t = 0; t < pairs && avg_smooth; ++t) {
            Vector x(dd), y(dd);
            for (double& v : x) v = rng.normal();
            for (double& v : y) v = rng.normal();
            const Vector delta = x - y;
            double acc = 0.0;
            for (int s = 0; s < inner_draws; ++s) {
                Vector w(dd);
                for (double& v : w) v = rng.normal();
                const double nw = norm2(w);
                const double sign = rng.coin() ? 1.0 : -1.0;
                // grad noise from a rank-1 Hessian perturbation of exact
                // operator norm sigma_h: (Q + sign sigma_h ww^T/|w|^2) delta
                Vector gdiff = q.apply(delta);
                const double coeff = sign * sigma_h * dot(w, delta) / (nw * nw);
                for (int j = 0; j < dd; ++j) gdiff[j] += coeff * w[j];
                acc += dot(gdiff, gdiff);
            }
            acc /= inner_draws;
            const double bound = 2.0 * (sigma_h * sigma_h + l_q * l_q) * dot(delta, delta);
            worst_ratio = std::max(worst_ratio, acc / bound);
            if (acc > bound) avg_smooth = false;
        }
    }

    // (c) STORM vs the Polyak variant on an average-smooth task: additive
    // gradient noise keeps the stochastic Jacobian differences exact, so the
    // task satisfies the average-smoothness condition with the plain
    // smoothness constant and the tracking floor dominates
    CustomQuadraticParams qp;
    qp.dim = 6;
    qp.components = 2;
    qp.tau = 1.0;
    qp.noise = NoiseSpec::gaussian(1.0);
    RngState qrng(660);
    const ProblemInstance avg_smooth_task = make_custom_quadratic(qp, qrng);
    const int big_k = h.fast ? 512 : 4096;
    const int n_seeds = h.fast ? 5 : 10;
    std::vector<double> storm_gaps, v1_gaps;
    for (int s = 1; s <= n_seeds; ++s) {
        SolverConfig cfg;
        cfg.iterations = big_k;
        cfg.seed = static_cast<uint64_t>(s);
        cfg.variant = SolverVariant::storm;
        cfg.schedule = Schedule::storm(2.0);
        RunRecord rec = run(avg_smooth_task, cfg);
        h.track(rec);
        storm_gaps.push_back(rec.min_gap);
        cfg.variant = SolverVariant::variant1;
        cfg.schedule = Schedule::nonconvex(2.0);
        rec = run(avg_smooth_task, cfg);
        h.track(rec);
        v1_gaps.push_back(rec.min_gap);
    }
    const double storm_med = median_of(storm_gaps);
    const double v1_med = median_of(v1_gaps);
    const bool storm_wins = storm_med <= v1_med;

    h.add(6, "hessian/storm estimators", unbiased && avg_smooth && storm_wins,
          "unbiasedness worst z=" + fmt(worst_z) + " (<=3), avg-smooth worst ratio=" +
              fmt(worst_ratio) + " (<=1), storm median " + fmt(storm_med) + " <= polyak " +
              fmt(v1_med));
}

// ---------------------------------------------------------------------------
// 7. Gap and curvature invariants

void criterion_gap_curvature(Harness& h) {
    RngState rng(700);

    // curvature probes under the analytic cap, on all three tasks
    bool curvature_ok = true;
    std::string detail;
    {
        struct Probe {
            const char* label;
            ProblemInstance problem;
        };
        RngState prng(701);
        MinimaxRegressionParams mm;  // paper-scale synthetic sizes
        mm.groups = 10;
        mm.dim = 100;
        mm.tau = 5.0;
        std::vector<Probe> probes;
        probes.push_back({"minimax", make_minimax_regression(mm, prng)});
        CvarPortfolioParams cp;
        cp.assets = 50;
        probes.push_back({"cvar", make_cvar_portfolio(cp, prng)});
        MatrixCompletionParams mc;
        probes.push_back({"completion", make_matrix_completion(mc, prng)});

        std::vector<double> gammas;
        for (int e = 0; e <= 10; ++e) gammas.push_back(std::pow(0.5, e));
        for (const Probe& p : probes) {
            const double s_bound = p.problem.outer.lipschitz_LF * p.problem.inner.constants.L *
                                   p.problem.domain.diameter * p.problem.domain.diameter *
                                   std::sqrt(static_cast<double>(p.problem.inner.dim_u));
            const double probe =
                curvature_probe(p.problem, h.fast ? 200 : 1000, gammas, rng);
            if (!(probe <= s_bound + 1e-8)) curvature_ok = false;
            detail += std::string(p.label) + ":" + fmt(probe) + "<=" + fmt(s_bound) + " ";
        }
    }

    // classical-gap reduction for a linear outer
    bool reduction_ok = true;
    {
        CustomQuadraticParams p;
        p.dim = 4;
        p.components = 1;
        p.tau = 1.5;
        RngState qrng(702);
        ProblemInstance lin = make_custom_quadratic(p, qrng);
        lin.outer = OuterFunction::linear_first();
        double worst = 0.0;
        for (int t = 0; t < 25; ++t) {
            const Vector y = lin.domain.random_interior(rng);
            const double gap = generalized_fw_gap(lin, y);
            const Vector grad = lin.inner.exact(y).jac.row(0);
            const Vector lmo = lmo_l1_ball(grad, lin.domain.tau);
            const double classical = dot(grad, y - lmo);
            worst = std::max(worst, std::abs(gap - classical));
            if (std::abs(gap - classical) > 1e-8) reduction_ok = false;
        }
        detail += "classical-gap dev=" + fmt(worst) + " ";
    }

    const bool gap_ok = h.min_raw_gap >= -1e-8;
    detail += "min raw gap=" + fmt(h.min_raw_gap) + " over " + std::to_string(h.gap_rows) + " rows";
    h.add(7, "gap nonnegativity and curvature caps", curvature_ok && reduction_ok && gap_ok,
          detail);
}

// ---------------------------------------------------------------------------
// 8. Baseline ordering

void criterion_baselines(Harness& h) {
    const ProblemInstance problem = task1_small();
    const int big_k = h.fast ? 512 : 4096;
    const int n_seeds = h.fast ? 5 : 10;
    const double clip_c = 8.0;

    std::vector<double> v2, clipped, vanilla;
    for (int s = 1; s <= n_seeds; ++s) {
        SolverConfig cfg;
        cfg.iterations = big_k;
        cfg.seed = static_cast<uint64_t>(s);
        cfg.schedule = Schedule::nonconvex(2.0);
        cfg.variant = SolverVariant::variant2;
        RunRecord rec = run(problem, cfg);
        h.track(rec);
        v2.push_back(rec.min_gap);
        cfg.variant = SolverVariant::clipped_scfw;
        cfg.clip_threshold = clip_c;
        rec = run(problem, cfg);
        h.track(rec);
        clipped.push_back(rec.min_gap);
        cfg.variant = SolverVariant::vanilla_scfw;
        rec = run(problem, cfg);
        h.track(rec);
        vanilla.push_back(rec.min_gap);
    }
    const double m_v2 = median_of(v2);
    const double m_cl = median_of(clipped);
    const double m_va = median_of(vanilla);
    const bool order_ok = m_v2 <= m_cl && m_cl <= m_va;

    // vanilla stagnation: flat fitted slope across the K grid
    const std::vector<int> k_grid =
        h.fast ? std::vector<int>{64, 128, 256, 512} : std::vector<int>{256, 512, 1024, 2048, 4096};
    std::vector<std::pair<double, double>> points;
    for (int k : k_grid) {
        double mean = 0.0;
        for (int s = 1; s <= n_seeds; ++s) {
            SolverConfig cfg;
            cfg.iterations = k;
            cfg.seed = static_cast<uint64_t>(s);
            cfg.schedule = Schedule::nonconvex(2.0);
            cfg.variant = SolverVariant::vanilla_scfw;
            const RunRecord rec = run(problem, cfg);
            h.track(rec);
            mean += rec.min_gap;
        }
        points.emplace_back(static_cast<double>(k), mean / n_seeds);
    }
    const RateFit fit = fit_rate(points);
    const double band = h.fast ? 0.15 : 0.08;
    const bool flat_ok = std::abs(fit.slope) <= band;

    h.add(8, "baseline ordering and vanilla stagnation", order_ok && flat_ok,
          "medians: taylor " + fmt(m_v2) + " <= clipped " + fmt(m_cl) + " <= vanilla " +
              fmt(m_va) + "; vanilla slope " + fmt(fit.slope) + " in +/-" + fmt(band));
}

// ---------------------------------------------------------------------------
// 9. Auxiliary inequality suite

void criterion_inequalities(Harness& h) {
    RngState rng(900);
    const int trials = h.fast ? 2000 : 10000;
    int fails = 0;

    // norm power convexity
    for (int t = 0; t < trials; ++t) {
        const int m = 2 + static_cast<int>(rng.next_u64() % 5);
        const int d = 1 + static_cast<int>(rng.next_u64() % 6);
        const double s = rng.coin() ? 1.5 : 2.0;
        Vector sum(d, 0.0);
        double rhs = 0.0;
        for (int i = 0; i < m; ++i) {
            Vector a(d);
            for (double& v : a) v = rng.normal();
            sum = sum + a;
            rhs += std::pow(norm2(a), s);
        }
        if (std::pow(norm2(sum), s) > std::pow(m, s - 1.0) * rhs * (1.0 + 1e-12)) ++fails;
    }

    // subadditivity of the 1/s power
    for (int t = 0; t < trials; ++t) {
        const int m = 2 + static_cast<int>(rng.next_u64() % 5);
        const double s = 1.0 + 2.0 * rng.uniform();
        double total = 0.0, rhs = 0.0;
        for (int i = 0; i < m; ++i) {
            const double a = rng.uniform() * 3.0;
            total += a;
            rhs += std::pow(a, 1.0 / s);
        }
        if (std::pow(total, 1.0 / s) > rhs * (1.0 + 1e-12) + 1e-12) ++fails;
    }

    // weighted Jensen
    for (int t = 0; t < trials; ++t) {
        const int m = 2 + static_cast<int>(rng.next_u64() % 5);
        const double s = 1.0 + 2.0 * rng.uniform();
        Vector w(m), a(m);
        double wsum = 0.0;
        for (int i = 0; i < m; ++i) {
            w[i] = rng.uniform();
            wsum += w[i];
        }
        const double shrink = rng.uniform();  // keep sum w <= 1
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < m; ++i) {
            w[i] *= shrink / wsum;
            a[i] = rng.uniform() * 3.0;
            lhs += w[i] * a[i];
            rhs += w[i] * std::pow(a[i], s);
        }
        if (std::pow(lhs, s) > rhs * (1.0 + 1e-12) + 1e-12) ++fails;
    }

    // second-moment additivity of independent sums (the r = 2 equality)
    const int k_terms = 8, dim = 4;
    double mean_sq = 0.0, mean_fourth = 0.0;
    for (int t = 0; t < trials; ++t) {
        Vector sum(dim, 0.0);
        for (int i = 0; i < k_terms; ++i) {
            Vector x(dim);
            for (double& v : x) v = rng.normal();
            sum = sum + x;
        }
        const double sq = dot(sum, sum);
        mean_sq += sq / trials;
        mean_fourth += sq * sq / trials;
    }
    const double target = static_cast<double>(k_terms * dim);
    const double se = std::sqrt(std::max(0.0, mean_fourth - mean_sq * mean_sq) / trials);
    const double z = std::abs(mean_sq - target) / (se + 1e-12);
    if (z > 3.0) ++fails;

    h.add(9, "auxiliary inequality suite", fails == 0,
          "violations=" + std::to_string(fails) + ", additivity z=" + fmt(z));
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism

void criterion_determinism(Harness& h) {
    namespace fs = std::filesystem;
    const std::string text =
        "task = custom_quadratic\n"
        "task.d = 4\n"
        "task.components = 2\n"
        "task.noise_family = gaussian\n"
        "task.noise_scale = 0.3\n"
        "problem_seed = 5\n"
        "algorithms = variant2, vanilla\n"
        "schedule = nonconvex\n"
        "K_grid = 16, 32\n"
        "seeds = 1, 2\n";
    ExperimentConfig cfg = parse_config_text(text, "<determinism>");

    const auto run_into = [&](const std::string& dir, int jobs) {
        ExperimentConfig c = cfg;
        c.output_dir = dir;
        run_experiment(c, jobs);
    };
    const auto read_all = [](const std::string& dir) {
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            std::ifstream in(entry.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            files[entry.path().filename().string()] = ss.str();
        }
        return files;
    };

    const fs::path base = fs::temp_directory_path() / "compfw_determinism";
    fs::remove_all(base);
    run_into((base / "a").string(), 1);
    run_into((base / "b").string(), 1);
    run_into((base / "c").string(), 4);
    const auto fa = read_all((base / "a").string());
    const auto fb = read_all((base / "b").string());
    const auto fc = read_all((base / "c").string());
    const bool rerun_ok = fa == fb;
    const bool jobs_ok = fa == fc;
    fs::remove_all(base);

    h.add(10, "byte-identical reruns and job independence", rerun_ok && jobs_ok,
          std::string("rerun ") + (rerun_ok ? "match" : "MISMATCH") + ", jobs 1 vs 4 " +
              (jobs_ok ? "match" : "MISMATCH") + ", files=" + std::to_string(fa.size()));
}

}  // namespace

AcceptSuite accept_suite_from_name(const std::string& name) {
    if (name == "unit") return AcceptSuite::unit;
    if (name == "lemmas") return AcceptSuite::lemmas;
    if (name == "rates") return AcceptSuite::rates;
    if (name == "all") return AcceptSuite::all;
    throw ConfigError("unknown acceptance suite '" + name + "'");
}

int run_acceptance(AcceptSuite suite, bool fast, std::ostream& out,
                   std::vector<CriterionResult>* results) {
    Harness h;
    h.fast = fast;

    const bool unit = suite == AcceptSuite::unit || suite == AcceptSuite::all;
    const bool lemmas = suite == AcceptSuite::lemmas || suite == AcceptSuite::all;
    const bool rates = suite == AcceptSuite::rates || suite == AcceptSuite::all;

    if (rates) criterion_rate(h);
    if (unit) {
        criterion_convex_interpolation(h);
        criterion_nonconvex_interpolation(h);
        criterion_oracles(h);
    }
    if (lemmas) criterion_tracker_bounds(h);
    if (rates) criterion_second_order(h);
    if (unit) criterion_gap_curvature(h);
    if (rates) criterion_baselines(h);
    if (unit) {
        criterion_inequalities(h);
        criterion_determinism(h);
    }

    std::sort(h.results.begin(), h.results.end(),
              [](const CriterionResult& a, const CriterionResult& b) { return a.index < b.index; });
    int failures = 0;
    for (const CriterionResult& r : h.results) {
        if (!r.pass) ++failures;
        out << '[' << (r.pass ? "PASS" : "FAIL") << "] " << r.index << ". " << r.name << ": "
            << r.detail << '\n';
    }
    out << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria FAILED")
        << (fast ? " (fast mode)" : "") << '\n';
    if (results) *results = h.results;
    return failures;
}

}  // namespace compfw
