#include "compfw/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace compfw {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParseError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

long long to_int(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParseError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config: bad boolean value for " + key + ": '" + v + "'");
}

SolverVariant variant_from_name(const std::string& name) {
    if (name == "variant1") return SolverVariant::variant1;
    if (name == "variant2") return SolverVariant::variant2;
    if (name == "storm") return SolverVariant::storm;
    if (name == "hessian") return SolverVariant::hessian;
    if (name == "vanilla") return SolverVariant::vanilla_scfw;
    if (name == "clipped") return SolverVariant::clipped_scfw;
    if (name == "deterministic") return SolverVariant::deterministic_basic;
    throw ParseError("config: unknown algorithm '" + name + "'");
}

Schedule schedule_from_name(const std::string& name, double r) {
    if (name == "nonconvex") return Schedule::nonconvex(r);
    if (name == "convex") return Schedule::convex(r);
    if (name == "deterministic_nonconvex") return Schedule::deterministic_nonconvex();
    if (name == "deterministic_convex") return Schedule::deterministic_convex();
    if (name == "storm") return Schedule::storm(r);
    throw ParseError("config: unknown schedule '" + name + "'");
}

NoiseSpec noise_from_params(const std::map<std::string, std::string>& p) {
    NoiseSpec spec = NoiseSpec::none();
    const auto fam = p.find("noise_family");
    if (fam == p.end() || fam->second == "none") return spec;
    const double scale =
        p.count("noise_scale") ? to_double(p.at("noise_scale"), "task.noise_scale") : 0.1;
    const double r = p.count("noise_r") ? to_double(p.at("noise_r"), "task.noise_r") : 2.0;
    if (fam->second == "gaussian") spec = NoiseSpec::gaussian(scale);
    else if (fam->second == "laplace") spec = NoiseSpec::laplace(scale);
    else if (fam->second == "pareto") spec = NoiseSpec::pareto(scale, r);
    else throw ParseError("config: unknown noise family '" + fam->second + "'");
    spec.moment_order_r = r;
    if (spec.family == NoiseFamily::symmetric_pareto) spec.tail_index = r + 0.5;
    return spec;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
        kv[key] = value;
    }

    double schedule_r = 2.0;
    if (kv.count("schedule.r")) schedule_r = to_double(kv["schedule.r"], "schedule.r");
    Schedule global_schedule = Schedule::nonconvex(schedule_r);
    if (kv.count("schedule")) {
        if (kv["schedule"] == "custom") {
            global_schedule = Schedule::custom_constant(
                kv.count("schedule.gamma") ? to_double(kv["schedule.gamma"], "schedule.gamma") : 1.0,
                kv.count("schedule.beta") ? to_double(kv["schedule.beta"], "schedule.beta") : 1.0,
                kv.count("schedule.rho") ? to_double(kv["schedule.rho"], "schedule.rho") : 1.0);
        } else {
            global_schedule = schedule_from_name(kv["schedule"], schedule_r);
        }
    }
    const double clip =
        kv.count("clip_C") ? to_double(kv["clip_C"], "clip_C") : 1.0;

    for (auto& [key, value] : kv) {
        if (key.rfind("task.", 0) == 0) {
            cfg.task_params[key.substr(5)] = value;
        } else if (key == "task") {
            cfg.task = value;
        } else if (key == "problem_seed") {
            cfg.problem_seed = static_cast<uint64_t>(to_int(value, key));
        } else if (key == "algorithms") {
            for (const std::string& tok : split_list(value)) {
                AlgorithmSpec spec;
                const size_t at = tok.find('@');
                const std::string name = at == std::string::npos ? tok : tok.substr(0, at);
                spec.variant = variant_from_name(name);
                spec.schedule = at == std::string::npos
                                    ? global_schedule
                                    : schedule_from_name(tok.substr(at + 1), schedule_r);
                spec.clip_threshold = clip;
                spec.label = name;
                cfg.algorithms.push_back(spec);
            }
        } else if (key == "K_grid") {
            for (const std::string& tok : split_list(value))
                cfg.k_grid.push_back(static_cast<int>(to_int(tok, key)));
        } else if (key == "seeds") {
            for (const std::string& tok : split_list(value))
                cfg.seeds.push_back(static_cast<uint64_t>(to_int(tok, key)));
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "record_every") {
            cfg.record_every = static_cast<int>(to_int(value, key));
        } else if (key == "inner_budget") {
            cfg.glmo.inner_budget = static_cast<int>(to_int(value, key));
        } else if (key == "smoothing_mu") {
            cfg.glmo.smoothing_mu = to_double(value, key);
        } else if (key == "feas_tol") {
            cfg.glmo.feas_tol = to_double(value, key);
        } else if (key == "timings") {
            cfg.timings = to_bool(value, key);
        } else if (key == "schedule" || key == "schedule.r" || key == "schedule.gamma" ||
                   key == "schedule.beta" || key == "schedule.rho" || key == "clip_C") {
            // consumed above
        } else {
            throw ParseError(origin + ": unknown key '" + key + "'");
        }
    }
    if (cfg.algorithms.empty()) throw ParseError(origin + ": no algorithms configured");
    if (cfg.k_grid.empty()) throw ParseError(origin + ": empty K_grid");
    if (cfg.seeds.empty()) throw ParseError(origin + ": empty seed list");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

ProblemInstance build_task(const ExperimentConfig& config) {
    RngState rng(config.problem_seed);
    const auto& p = config.task_params;
    const auto geti = [&](const std::string& k, long long dflt) {
        return p.count(k) ? to_int(p.at(k), "task." + k) : dflt;
    };
    const auto getd = [&](const std::string& k, double dflt) {
        return p.count(k) ? to_double(p.at(k), "task." + k) : dflt;
    };
    const NoiseSpec noise = noise_from_params(p);

    if (config.task == "minimax_regression") {
        if (p.count("libsvm_path")) {
            const LibsvmData data = load_libsvm(p.at("libsvm_path"));
            return make_minimax_from_data(data.features, data.labels,
                                          static_cast<int>(geti("m", 10)), getd("tau", 10.0),
                                          noise, rng);
        }
        MinimaxRegressionParams mp;
        mp.groups = static_cast<int>(geti("m", 10));
        mp.dim = static_cast<int>(geti("d", 100));
        mp.tau = getd("tau", 5.0);
        mp.samples_per_group = static_cast<int>(geti("samples_per_group", 50));
        mp.noise = noise;
        if (p.count("group_noise_scales"))
            for (const std::string& tok : split_list(p.at("group_noise_scales")))
                mp.group_noise_scales.push_back(to_double(tok, "task.group_noise_scales"));
        return make_minimax_regression(mp, rng);
    }
    if (config.task == "cvar_portfolio") {
        CvarPortfolioParams cp;
        cp.assets = static_cast<int>(geti("d", 50));
        cp.alpha = getd("alpha", 0.95);
        cp.scenarios = static_cast<int>(geti("scenarios", 100));
        if (p.count("noise_family")) cp.noise = noise;
        return make_cvar_portfolio(cp, rng);
    }
    if (config.task == "matrix_completion") {
        MatrixCompletionParams mp;
        mp.rows = static_cast<int>(geti("rows", 30));
        mp.cols = static_cast<int>(geti("cols", 20));
        mp.rank = static_cast<int>(geti("rank", 5));
        mp.density = getd("density", 0.3);
        mp.tau = getd("tau", 10.0);
        if (p.count("noise_family")) mp.noise = noise;
        return make_matrix_completion(mp, rng);
    }
    if (config.task == "custom_quadratic") {
        CustomQuadraticParams qp;
        qp.dim = static_cast<int>(geti("d", 5));
        qp.components = static_cast<int>(geti("components", 2));
        qp.tau = getd("tau", 1.0);
        qp.convex = !p.count("convex") || to_bool(p.at("convex"), "task.convex");
        qp.noise = noise;
        qp.hessian_noise_scale = getd("hessian_noise_scale", 0.0);
        return make_custom_quadratic(qp, rng);
    }
    throw ConfigError("config: unknown task '" + config.task + "'");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trace_csv(const RunRecord& record, bool timings) {
    std::string out = "k,objective,gap,gap_running_min,delta_g_norm,delta_f_norm,"
                      "glmo_inner_iters,elapsed_ns\n";
    double running_min = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : record.rows) {
        running_min = std::min(running_min, row.gap);
        out += std::to_string(row.k);
        out += ',';
        out += format_double(row.objective);
        out += ',';
        out += format_double(std::max(0.0, row.gap));  // raw minimum kept in the running-min column
        out += ',';
        out += format_double(running_min);
        out += ',';
        out += format_double(row.delta_g_norm);
        out += ',';
        out += format_double(row.delta_f_norm);
        out += ',';
        out += std::to_string(row.glmo_inner_iters);
        out += ',';
        out += std::to_string(timings ? row.elapsed_ns : 0);
        out += '\n';
    }
    return out;
}

namespace {

struct RunTask {
    int alg_index;
    int k;
    uint64_t seed;
};

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, int jobs) {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = config;
    if (const char* env_seed = std::getenv("COMPFW_SEED"))
        cfg.seeds = {static_cast<uint64_t>(std::strtoull(env_seed, nullptr, 10))};

    const ProblemInstance problem = build_task(cfg);
    fs::create_directories(cfg.output_dir);

    std::vector<RunTask> tasks;
    for (int a = 0; a < static_cast<int>(cfg.algorithms.size()); ++a)
        for (int k : cfg.k_grid)
            for (uint64_t seed : cfg.seeds) tasks.push_back({a, k, seed});

    struct Result {
        bool ok = false;
        std::string error;
        std::string csv;
        double min_gap = 0.0;
    };
    std::vector<Result> results(tasks.size());

    std::atomic<size_t> next{0};
    const auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const RunTask& t = tasks[i];
            const AlgorithmSpec& alg = cfg.algorithms[t.alg_index];
            SolverConfig sc;
            sc.variant = alg.variant;
            sc.schedule = alg.schedule;
            sc.iterations = t.k;
            sc.seed = t.seed;
            sc.glmo = cfg.glmo;
            sc.clip_threshold = alg.clip_threshold;
            sc.record_every = cfg.record_every;
            try {
                const RunRecord rec = run(problem, sc);
                results[i].csv = trace_csv(rec, cfg.timings);
                results[i].min_gap = rec.min_gap;
                results[i].ok = true;
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    const int n_workers = std::max(1, jobs);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    ExperimentReport report;
    report.runs_total = static_cast<int>(tasks.size());
    for (size_t i = 0; i < tasks.size(); ++i) {
        const RunTask& t = tasks[i];
        const std::string name = std::string("trace_") + cfg.algorithms[t.alg_index].label + "_K" +
                                 std::to_string(t.k) + "_seed" + std::to_string(t.seed) + ".csv";
        if (!results[i].ok) {
            ++report.runs_failed;
            report.failures.push_back(name + ": " + results[i].error);
            continue;
        }
        std::ofstream out(fs::path(cfg.output_dir) / name, std::ios::binary);
        if (!out) throw ConfigError("experiment: cannot write " + name);
        out << results[i].csv;
    }

    // Aggregate per (algorithm, K) in configuration order.
    std::string agg = "algorithm,K,mean_min_gap,median_min_gap,se_min_gap,seeds\n";
    for (int a = 0; a < static_cast<int>(cfg.algorithms.size()); ++a) {
        std::vector<std::pair<double, double>> fit_input;
        for (int k : cfg.k_grid) {
            std::vector<double> gaps;
            for (size_t i = 0; i < tasks.size(); ++i)
                if (tasks[i].alg_index == a && tasks[i].k == k && results[i].ok)
                    gaps.push_back(results[i].min_gap);
            if (gaps.empty()) continue;
            AggregateRow row;
            row.algorithm = cfg.algorithms[a].label;
            row.k = k;
            row.n_seeds = static_cast<int>(gaps.size());
            double mean = 0.0;
            for (double g : gaps) mean += g;
            mean /= gaps.size();
            double var = 0.0;
            for (double g : gaps) var += (g - mean) * (g - mean);
            var = gaps.size() > 1 ? var / (gaps.size() - 1) : 0.0;
            row.mean_min_gap = mean;
            row.median_min_gap = median_of(gaps);
            row.se_min_gap = std::sqrt(var / gaps.size());
            report.aggregate.push_back(row);
            agg += row.algorithm + ',' + std::to_string(row.k) + ',' +
                   format_double(row.mean_min_gap) + ',' + format_double(row.median_min_gap) +
                   ',' + format_double(row.se_min_gap) + ',' + std::to_string(row.n_seeds) + '\n';
            fit_input.emplace_back(static_cast<double>(k), mean);
        }
        if (fit_input.size() >= 3) {
            try {
                report.rate_fits.emplace_back(cfg.algorithms[a].label, fit_rate(fit_input));
            } catch (const ConfigError&) {
                // all-nonpositive gaps: no fit for this algorithm
            }
        }
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "aggregate.csv", std::ios::binary);
        out << agg;
    }
    {
        std::string fits = "algorithm,slope,intercept,r_squared,points,excluded\n";
        for (const auto& [label, fit] : report.rate_fits)
            fits += label + ',' + format_double(fit.slope) + ',' + format_double(fit.intercept) +
                    ',' + format_double(fit.r_squared) + ',' + std::to_string(fit.points.size()) +
                    ',' + std::to_string(fit.excluded) + '\n';
        std::ofstream out(fs::path(cfg.output_dir) / "ratefit.csv", std::ios::binary);
        out << fits;
    }
    {
        std::ostringstream rep;
        rep << "task: " << cfg.task << "\nruns: " << report.runs_total
            << "\nfailed: " << report.runs_failed << '\n';
        for (const std::string& f : report.failures) rep << "failure: " << f << '\n';
        for (const auto& [label, fit] : report.rate_fits)
            rep << "ratefit " << label << ": slope " << format_double(fit.slope) << ", r2 "
                << format_double(fit.r_squared) << '\n';
        std::ofstream out(fs::path(cfg.output_dir) / "report.txt", std::ios::binary);
        out << rep.str();
    }
    return report;
}

}  // namespace compfw
