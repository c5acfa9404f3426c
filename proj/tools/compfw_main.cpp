#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "compfw/accept.hpp"
#include "compfw/experiment.hpp"
#include "compfw/metrics.hpp"

namespace {

int cmd_run(const std::string& config_path, int jobs, const std::string& output_override) {
    compfw::ExperimentConfig cfg = compfw::parse_config_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    const compfw::ExperimentReport report = compfw::run_experiment(cfg, jobs);
    std::cout << "runs: " << report.runs_total << ", failed: " << report.runs_failed << '\n';
    for (const auto& [label, fit] : report.rate_fits)
        std::cout << "ratefit " << label << ": slope " << fit.slope << " (r2 " << fit.r_squared
                  << ")\n";
    for (const std::string& f : report.failures) std::cerr << "failure: " << f << '\n';
    std::cout << "output written to " << cfg.output_dir << '\n';
    return 0;  // run failures land in the report, not the exit code
}

int cmd_gap(const std::string& config_path, const std::string& point_path) {
    const compfw::ExperimentConfig cfg = compfw::parse_config_file(config_path);
    const compfw::ProblemInstance problem = compfw::build_task(cfg);
    std::ifstream in(point_path);
    if (!in) throw compfw::ConfigError("cannot open point file " + point_path);
    compfw::Vector y;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            size_t used = 0;
            y.push_back(std::stod(line, &used));
        } catch (const std::exception&) {
            throw compfw::ParseError(point_path + ":" + std::to_string(line_no) +
                                     ": expected one real per line");
        }
    }
    if (static_cast<int>(y.size()) != problem.inner.dim_x)
        throw compfw::ConfigError("point has dimension " + std::to_string(y.size()) +
                                  ", problem needs " + std::to_string(problem.inner.dim_x));
    if (!problem.domain.contains(y, 1e-8))
        std::cerr << "warning: point is outside the feasible domain\n";
    const double gap = compfw::generalized_fw_gap(problem, y, cfg.glmo);
    std::cout.precision(12);
    std::cout << "objective " << problem.objective_exact(y) << '\n';
    std::cout << "gap " << gap << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compfw: projection-free solvers for fully composite stochastic problems"};
    app.require_subcommand(1);

    std::string config_path, point_path, output_dir, suite = "all";
    int jobs = 1;
    bool fast = false;

    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment grid from a config file");
    run_cmd->add_option("config", config_path, "config file (key = value)")->required();
    run_cmd->add_option("--jobs", jobs, "parallel workers");
    run_cmd->add_option("--output", output_dir, "output directory override");

    CLI::App* accept_cmd = app.add_subcommand("accept", "run an acceptance suite");
    accept_cmd->add_option("suite", suite, "unit | lemmas | rates | all");
    accept_cmd->add_flag("--fast", fast, "reduced grids, wider tolerances");

    CLI::App* gap_cmd = app.add_subcommand("gap", "generalized gap at a point");
    gap_cmd->add_option("config", config_path, "config file defining the task")->required();
    gap_cmd->add_option("point", point_path, "point file, one real per line")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, jobs, output_dir);
        if (accept_cmd->parsed())
            return compfw::run_acceptance(compfw::accept_suite_from_name(suite), fast, std::cout) ==
                           0
                       ? 0
                       : 1;
        if (gap_cmd->parsed()) return cmd_gap(config_path, point_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
