#pragma once

#include <map>
#include <string>
#include <vector>

#include "compfw/metrics.hpp"
#include "compfw/solver.hpp"

// Experiment runner behind the CLI: flat key=value config files, seed- and
// K-replicated grids, deterministic CSV emission, aggregation and rate-fit
// reports. Output bytes are independent of the worker count.

namespace compfw {

struct AlgorithmSpec {
    SolverVariant variant = SolverVariant::variant2;
    Schedule schedule = Schedule::nonconvex();
    double clip_threshold = 1.0;
    std::string label;
};

struct ExperimentConfig {
    std::string task = "custom_quadratic";
    std::map<std::string, std::string> task_params;
    uint64_t problem_seed = 42;
    std::vector<AlgorithmSpec> algorithms;
    std::vector<int> k_grid;
    std::vector<uint64_t> seeds;
    std::string output_dir = "out";
    GlmoParams glmo;
    int record_every = 0;
    bool timings = false;  // real elapsed_ns breaks byte-reproducibility
};

// Flat "key = value" format, '#' comments, comma-separated lists.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

ProblemInstance build_task(const ExperimentConfig& config);

struct AggregateRow {
    std::string algorithm;
    int k = 0;
    double mean_min_gap = 0.0;
    double median_min_gap = 0.0;
    double se_min_gap = 0.0;
    int n_seeds = 0;
};

struct ExperimentReport {
    int runs_total = 0;
    int runs_failed = 0;
    std::vector<std::string> failures;
    std::vector<AggregateRow> aggregate;
    std::vector<std::pair<std::string, RateFit>> rate_fits;  // per algorithm
};

// Executes every (algorithm, K, seed) triple, writing one trace CSV per run
// plus aggregate.csv, ratefit.csv and report.txt under output_dir. The
// COMPFW_SEED environment variable, when set, replaces the seed list.
ExperimentReport run_experiment(const ExperimentConfig& config, int jobs = 1);

std::string trace_csv(const RunRecord& record, bool timings);
std::string format_double(double v);

}  // namespace compfw
