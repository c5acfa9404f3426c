#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "compfw/accept.hpp"
#include "compfw/experiment.hpp"
#include "compfw/glmo.hpp"
#include "compfw/metrics.hpp"
#include "compfw/solver.hpp"

#include <sstream>

namespace py = pybind11;
using namespace compfw;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ConfigError("expected a 2-d array");
    Matrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::array_t<double> vector_to_numpy(const Vector& v) {
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

NoiseSpec noise_from_args(const std::string& family, double scale, double r) {
    if (family == "none") return NoiseSpec::none();
    NoiseSpec spec;
    if (family == "gaussian") spec = NoiseSpec::gaussian(scale);
    else if (family == "laplace") spec = NoiseSpec::laplace(scale);
    else if (family == "pareto") spec = NoiseSpec::pareto(scale, r);
    else throw ConfigError("unknown noise family '" + family + "'");
    spec.moment_order_r = r;
    if (spec.family == NoiseFamily::symmetric_pareto) spec.tail_index = r + 0.5;
    return spec;
}

Schedule schedule_from_args(const std::string& name, double r) {
    if (name == "nonconvex") return Schedule::nonconvex(r);
    if (name == "convex") return Schedule::convex(r);
    if (name == "deterministic_nonconvex") return Schedule::deterministic_nonconvex();
    if (name == "deterministic_convex") return Schedule::deterministic_convex();
    if (name == "storm") return Schedule::storm(r);
    throw ConfigError("unknown schedule '" + name + "'");
}

SolverVariant variant_from_args(const std::string& name) {
    if (name == "variant1") return SolverVariant::variant1;
    if (name == "variant2") return SolverVariant::variant2;
    if (name == "storm") return SolverVariant::storm;
    if (name == "hessian") return SolverVariant::hessian;
    if (name == "vanilla") return SolverVariant::vanilla_scfw;
    if (name == "clipped") return SolverVariant::clipped_scfw;
    if (name == "deterministic") return SolverVariant::deterministic_basic;
    throw ConfigError("unknown variant '" + name + "'");
}

py::dict record_to_dict(const RunRecord& rec) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(rec.rows.size())};
    py::array_t<int> k(shape);
    py::array_t<double> objective(shape), gap(shape), dg(shape), df(shape);
    for (size_t i = 0; i < rec.rows.size(); ++i) {
        k.mutable_at(i) = rec.rows[i].k;
        objective.mutable_at(i) = rec.rows[i].objective;
        gap.mutable_at(i) = rec.rows[i].gap;
        dg.mutable_at(i) = rec.rows[i].delta_g_norm;
        df.mutable_at(i) = rec.rows[i].delta_f_norm;
    }
    py::dict out;
    out["k"] = k;
    out["objective"] = objective;
    out["gap"] = gap;
    out["delta_g_norm"] = dg;
    out["delta_f_norm"] = df;
    out["min_gap"] = rec.min_gap;
    out["argmin_k"] = rec.argmin_k;
    out["total_oracle_calls"] = rec.total_oracle_calls;
    out["final_y"] = vector_to_numpy(rec.final_y);
    return out;
}

}  // namespace

PYBIND11_MODULE(_compfw, m) {
    m.doc() = "projection-free solvers for fully composite stochastic optimization";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<OracleError>(m, "OracleError");
    py::register_exception<ParseError>(m, "ParseError");

    py::class_<ProblemInstance>(m, "Problem")
        .def_property_readonly("name", [](const ProblemInstance& p) { return p.name; })
        .def_property_readonly("dim_x", [](const ProblemInstance& p) { return p.inner.dim_x; })
        .def_property_readonly("dim_u", [](const ProblemInstance& p) { return p.inner.dim_u; })
        .def_property_readonly("diameter",
                               [](const ProblemInstance& p) { return p.domain.diameter; })
        .def("objective",
             [](const ProblemInstance& p, const Vector& x) { return p.objective_exact(x); })
        .def("default_point", [](const ProblemInstance& p) { return p.domain.default_point(); })
        .def("gap", [](const ProblemInstance& p, const Vector& y) {
            return generalized_fw_gap(p, y);
        });

    m.def(
        "make_minimax_regression",
        [](int m_, int d, double tau, int samples_per_group, const std::string& noise_family,
           double noise_scale, double noise_r, uint64_t seed) {
            MinimaxRegressionParams p;
            p.groups = m_;
            p.dim = d;
            p.tau = tau;
            p.samples_per_group = samples_per_group;
            p.noise = noise_from_args(noise_family, noise_scale, noise_r);
            RngState rng(seed);
            return make_minimax_regression(p, rng);
        },
        py::arg("m") = 10, py::arg("d") = 100, py::arg("tau") = 5.0,
        py::arg("samples_per_group") = 50, py::arg("noise_family") = "gaussian",
        py::arg("noise_scale") = 0.5, py::arg("noise_r") = 2.0, py::arg("seed") = 42);

    m.def(
        "make_cvar_portfolio",
        [](int d, double alpha, int scenarios, const std::string& noise_family, double noise_scale,
           double noise_r, uint64_t seed) {
            CvarPortfolioParams p;
            p.assets = d;
            p.alpha = alpha;
            p.scenarios = scenarios;
            p.noise = noise_from_args(noise_family, noise_scale, noise_r);
            RngState rng(seed);
            return make_cvar_portfolio(p, rng);
        },
        py::arg("d") = 50, py::arg("alpha") = 0.95, py::arg("scenarios") = 100,
        py::arg("noise_family") = "pareto", py::arg("noise_scale") = 0.02,
        py::arg("noise_r") = 2.0, py::arg("seed") = 42);

    m.def(
        "make_matrix_completion",
        [](int rows, int cols, int rank, double density, double tau,
           const std::string& noise_family, double noise_scale, double noise_r, uint64_t seed) {
            MatrixCompletionParams p;
            p.rows = rows;
            p.cols = cols;
            p.rank = rank;
            p.density = density;
            p.tau = tau;
            p.noise = noise_from_args(noise_family, noise_scale, noise_r);
            RngState rng(seed);
            return make_matrix_completion(p, rng);
        },
        py::arg("rows") = 30, py::arg("cols") = 20, py::arg("rank") = 5, py::arg("density") = 0.3,
        py::arg("tau") = 10.0, py::arg("noise_family") = "laplace", py::arg("noise_scale") = 0.1,
        py::arg("noise_r") = 2.0, py::arg("seed") = 42);

    m.def(
        "make_custom_quadratic",
        [](int d, int components, double tau, bool convex, const std::string& noise_family,
           double noise_scale, double noise_r, uint64_t seed) {
            CustomQuadraticParams p;
            p.dim = d;
            p.components = components;
            p.tau = tau;
            p.convex = convex;
            p.noise = noise_from_args(noise_family, noise_scale, noise_r);
            RngState rng(seed);
            return make_custom_quadratic(p, rng);
        },
        py::arg("d") = 5, py::arg("components") = 2, py::arg("tau") = 1.0,
        py::arg("convex") = true, py::arg("noise_family") = "none", py::arg("noise_scale") = 0.0,
        py::arg("noise_r") = 2.0, py::arg("seed") = 42);

    m.def(
        "run",
        [](const ProblemInstance& problem, const std::string& variant, const std::string& schedule,
           int iterations, uint64_t seed, double schedule_r, double clip_threshold,
           int record_every, int inner_budget, double smoothing_mu) {
            SolverConfig cfg;
            cfg.variant = variant_from_args(variant);
            cfg.schedule = schedule_from_args(schedule, schedule_r);
            cfg.iterations = iterations;
            cfg.seed = seed;
            cfg.clip_threshold = clip_threshold;
            cfg.record_every = record_every;
            cfg.glmo.inner_budget = inner_budget;
            cfg.glmo.smoothing_mu = smoothing_mu;
            return record_to_dict(run(problem, cfg));
        },
        py::arg("problem"), py::arg("variant") = "variant2", py::arg("schedule") = "nonconvex",
        py::arg("iterations") = 1024, py::arg("seed") = 1, py::arg("schedule_r") = 2.0,
        py::arg("clip_threshold") = 1.0, py::arg("record_every") = 0,
        py::arg("inner_budget") = 200, py::arg("smoothing_mu") = 1e-3);

    m.def(
        "solve_lp",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& c,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const Vector& b, const std::vector<std::string>& sense, const Vector& lower,
           const Vector& upper) {
            LinearProgram lp;
            lp.objective.assign(c.data(), c.data() + c.size());
            lp.constraints = matrix_from_numpy(a);
            lp.rhs = b;
            for (const std::string& s : sense) {
                if (s == "<=") lp.sense.push_back(RowSense::le);
                else if (s == "==") lp.sense.push_back(RowSense::eq);
                else throw ConfigError("row sense must be '<=' or '=='");
            }
            lp.lower = lower;
            lp.upper = upper;
            const LpSolution sol = solve_lp(lp);
            py::dict out;
            out["status"] = sol.status == LpStatus::optimal
                                ? "optimal"
                                : (sol.status == LpStatus::infeasible ? "infeasible" : "unbounded");
            out["x"] = sol.x;
            out["objective"] = sol.objective_value;
            return out;
        },
        py::arg("c"), py::arg("A"), py::arg("b"), py::arg("sense"), py::arg("lower"),
        py::arg("upper"));

    m.def("lmo_l1_ball", &lmo_l1_ball, py::arg("g"), py::arg("tau"));
    m.def(
        "lmo_nuclear_ball",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g, double tau) {
            return matrix_to_numpy(lmo_nuclear_ball(matrix_from_numpy(g), tau));
        },
        py::arg("g"), py::arg("tau"));

    m.def(
        "fit_rate",
        [](const std::vector<std::pair<double, double>>& pts) {
            const RateFit fit = fit_rate(pts);
            py::dict out;
            out["slope"] = fit.slope;
            out["intercept"] = fit.intercept;
            out["r_squared"] = fit.r_squared;
            out["excluded"] = fit.excluded;
            return out;
        },
        py::arg("k_and_min_gap"));

    m.def(
        "load_libsvm",
        [](const std::string& path) {
            const LibsvmData data = load_libsvm(path);
            return py::make_tuple(matrix_to_numpy(data.features), data.labels);
        },
        py::arg("path"));

    m.def(
        "run_acceptance",
        [](const std::string& suite, bool fast) {
            std::ostringstream out;
            const int failures = run_acceptance(accept_suite_from_name(suite), fast, out);
            return py::make_tuple(failures, out.str());
        },
        py::arg("suite") = "unit", py::arg("fast") = true);

    m.def("vbe_constant", &vbe_constant, py::arg("r"));
    m.def(
        "sample_noise_vector",
        [](const std::string& family, double scale, double r, int dim, uint64_t seed) {
            const NoiseSpec spec = noise_from_args(family, scale, r);
            RngState rng(seed);
            return sample_noise_vector(spec, dim, rng);
        },
        py::arg("family"), py::arg("scale"), py::arg("r"), py::arg("dim"), py::arg("seed") = 0);
}
