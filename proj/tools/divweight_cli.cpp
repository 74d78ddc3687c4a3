// Command-line front end: weights from prediction matrices, simulation
// experiments to CSV, and the solver self-test.
//
// Exit codes: 0 success; 1 self-test failure or internal error; 2 malformed
// input, invalid arguments or unwritable output; 3 dimension mismatch;
// 4 solver did not converge (weights are still printed).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "divweight/csv_io.hpp"
#include "divweight/experiments.hpp"
#include "divweight/selftest.hpp"
#include "divweight/weighting.hpp"

namespace dw = divweight;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kMalformed = 2, kDimension = 3, kNotConverged = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw UsageError("empty list '" + text + "'");
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (double v : dw::parse_number_list(text)) {
        if (v < 0 || v != std::floor(v)) throw UsageError("expected nonnegative integers in '" + text + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_enum_list(const std::string& text, Parse parse) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) out.push_back(parse(item));
    return out;
}

// Writes through `emit` to `path`, or to stdout when path is "-".
void write_output(const std::string& path, const std::function<void(std::ostream&)>& emit) {
    if (path == "-") {
        emit(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open output file '" + path + "' for writing");
    emit(out);
    out.flush();
    if (!out) throw UsageError("failed writing output file '" + path + "'");
}

struct CommonOptions {
    std::uint64_t seed = 1;
    std::size_t replications = 200;
    std::size_t jobs = 1;
    std::string output = "-";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_option("--replications", o.replications, "Replications per cell");
    cmd->add_option("--jobs", o.jobs, "Worker threads");
    cmd->add_option("--output", o.output, "Output CSV path ('-' for stdout)");
}

struct WeightsOptions {
    std::string input;
    std::string optimism_path;
    std::string inline_op;
    std::string method = "dw";
    std::string penalty = "kl";
    double c = 1.0;
    std::string prior = "optimism";
    double tolerance = 1e-8;
    std::size_t max_iterations = 10000;
};

int cmd_weights(const WeightsOptions& o) {
    const dw::LogDensityMatrix matrix = dw::read_log_density_csv_file(o.input);
    const dw::Method method = dw::parse_method(o.method);
    const std::size_t k = matrix.models();

    dw::OptimismVector op = dw::OptimismVector::zeros(k);
    if (!o.optimism_path.empty() && !o.inline_op.empty()) throw UsageError("give either --optimism or --op, not both");
    if (!o.optimism_path.empty()) {
        op = dw::read_optimism_csv_file(o.optimism_path, matrix.labels());
    } else if (!o.inline_op.empty()) {
        const auto values = dw::parse_number_list(o.inline_op);
        if (values.size() != k) {
            throw dw::DimensionError("--op has " + std::to_string(values.size()) + " values, matrix has " +
                                     std::to_string(k) + " models");
        }
        op = dw::OptimismVector(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(k)));
    } else if (method != dw::Method::Stack) {
        throw UsageError("methods dw and new need --optimism or --op");
    }

    const dw::PenaltyConfig penalty =
        dw::penalty_for(dw::parse_penalty_kind(o.penalty), o.c, dw::parse_prior_kind(o.prior));
    dw::SolverConfig solver;
    solver.tolerance = o.tolerance;
    solver.max_iterations = o.max_iterations;
    solver.validate();

    dw::SolverReport report;
    Eigen::VectorXd weights;
    switch (method) {
    case dw::Method::DW: {
        auto r = dw::divergence_weights(matrix, op, penalty, solver);
        weights = r.weights.values();
        report = r.report;
        break;
    }
    case dw::Method::Stack: {
        auto r = dw::stacking_weights(matrix, solver);
        weights = r.weights.values();
        report = r.report;
        break;
    }
    case dw::Method::New: {
        const dw::OptimismVector prior_op =
            std::holds_alternative<dw::UniformPrior>(penalty.prior) ? dw::OptimismVector::zeros(k) : op;
        const dw::SimplexWeights w = dw::negative_exponentiated_weights(dw::selection_criteria(matrix, prior_op));
        const Eigen::VectorXd fit = -matrix.values().colwise().sum().transpose();
        weights = w.values();
        report.objective = dw::negexp_objective(weights, fit, dw::optimism_prior(prior_op));
        report.converged = true;
        break;
    }
    }

    // Numbers are formatted by hand to pin 17 significant digits.
    std::ostringstream json;
    json << "{\"method\": " << nlohmann::json(dw::to_string(method)).dump() << ", \"weights\": {";
    for (std::size_t j = 0; j < k; ++j) {
        json << (j ? ", " : "") << nlohmann::json(matrix.labels()[j]).dump() << ": "
             << dw::format_double(weights(static_cast<Eigen::Index>(j)));
    }
    json << "}, \"objective\": " << dw::format_double(report.objective) << ", \"iterations\": " << report.iterations
         << ", \"kkt_residual\": " << dw::format_double(report.kkt_residual)
         << ", \"converged\": " << (report.converged ? "true" : "false") << "}\n";
    std::cout << json.str();
    return report.converged ? kOk : kNotConverged;
}

struct ExperimentOptions {
    CommonOptions common;
    std::string scenarios = "nonsparse_indep";
    std::string n_grid;
    std::string methods = "dw,stack,new";
    std::size_t test_size = 200;
    std::size_t models = 10;
    std::string errors = "gaussian";
    std::string penalty = "kl";
    std::string c = "1";
    std::string prior = "optimism";
};

void add_experiment(CLI::App* cmd, ExperimentOptions& o) {
    add_common(cmd, o.common);
    cmd->add_option("--scenarios,--scenario", o.scenarios,
                    "Comma list of nonsparse_indep, nonsparse_corr, sparse_indep, sparse_corr");
    cmd->add_option("--n-grid", o.n_grid, "Comma list of training sample sizes");
    cmd->add_option("--methods", o.methods, "Comma list of dw, stack, new");
    cmd->add_option("--test-size", o.test_size, "Test set size");
    cmd->add_option("--models", o.models, "Models per random model space");
    cmd->add_option("--errors", o.errors, "gaussian or student_t3 (comma list for robustness)");
    cmd->add_option("--penalty", o.penalty, "kl or brier (comma list for robustness)");
    cmd->add_option("--c", o.c, "Penalty scale (comma list for robustness)");
    cmd->add_option("--prior", o.prior, "optimism or uniform (comma list for robustness)");
}

dw::ExperimentConfig experiment_config(const ExperimentOptions& o, std::vector<std::size_t> default_grid) {
    dw::ExperimentConfig cfg;
    cfg.scenarios = parse_enum_list<dw::Scenario>(o.scenarios, dw::parse_scenario);
    cfg.n_grid = o.n_grid.empty() ? std::move(default_grid) : parse_sizes(o.n_grid);
    cfg.replications = o.common.replications;
    cfg.base_seed = o.common.seed;
    cfg.jobs = o.common.jobs;
    cfg.methods = parse_enum_list<dw::Method>(o.methods, dw::parse_method);
    cfg.test_size = o.test_size;
    cfg.models = o.models;
    const auto errors = parse_enum_list<dw::ErrorKind>(o.errors, dw::parse_error_kind);
    cfg.error_kind = errors.front();
    const auto cs = dw::parse_number_list(o.c);
    cfg.penalty = dw::penalty_for(parse_enum_list<dw::PenaltyKind>(o.penalty, dw::parse_penalty_kind).front(),
                                  cs.front(), parse_enum_list<dw::PriorKind>(o.prior, dw::parse_prior_kind).front());
    cfg.validate();
    return cfg;
}

int report_selftest(const std::vector<dw::SuiteResult>& results) {
    bool ok = true;
    double total = 0.0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << r.seconds << " s)\n";
        ok = ok && r.passed;
        total += r.seconds;
    }
    if (total > 60.0) std::cerr << "warning: self-test took " << total << " s (budget 60 s)\n";
    return ok ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model weights for averaging probabilistic predictions"};
    app.require_subcommand(1);

    WeightsOptions wopt;
    auto* weights = app.add_subcommand("weights", "Compute weights from a log-density CSV; prints JSON");
    weights->add_option("--input", wopt.input, "Log-density CSV (header of model labels)")->required();
    weights->add_option("--optimism", wopt.optimism_path, "CSV with columns model,optimism");
    weights->add_option("--op", wopt.inline_op, "Inline optimism values in column order, e.g. 0.5,1.2");
    weights->add_option("--method", wopt.method, "dw, stack or new");
    weights->add_option("--penalty", wopt.penalty, "kl or brier");
    weights->add_option("--c", wopt.c, "Penalty scale");
    weights->add_option("--prior", wopt.prior, "optimism or uniform");
    weights->add_option("--tolerance", wopt.tolerance, "Relative KKT tolerance");
    weights->add_option("--max-iterations", wopt.max_iterations, "Iteration cap");

    ExperimentOptions sim_opt, stab_opt, rob_opt;
    auto* simulate = app.add_subcommand("simulate", "Linear-regression averaging experiment, one row per run");
    add_experiment(simulate, sim_opt);
    auto* stability = app.add_subcommand("stability", "Across-replication sd of weights for a fixed truth");
    stab_opt.common.replications = 300;
    add_experiment(stability, stab_opt);
    auto* robustness = app.add_subcommand("robustness", "Penalty, scale, prior and error-distribution variants");
    rob_opt.c = "0.5,1,2";
    rob_opt.penalty = "kl,brier";
    rob_opt.prior = "optimism,uniform";
    rob_opt.errors = "gaussian,student_t3";
    add_experiment(robustness, rob_opt);

    CommonOptions conv_opt;
    conv_opt.replications = 100;
    std::string conv_grid = "50,200,800";
    std::string conv_scenario = "nonsparse_indep";
    std::size_t conv_holdout = 10000;
    auto* convergence = app.add_subcommand("convergence", "Gap between empirical and ideal objective versus n");
    add_common(convergence, conv_opt);
    convergence->add_option("--n-grid", conv_grid, "Comma list of sample sizes");
    convergence->add_option("--scenario", conv_scenario, "Data-generating scenario");
    convergence->add_option("--holdout", conv_holdout, "Holdout size for the expected loss");

    auto* selftest = app.add_subcommand("selftest", "Grid-oracle, boundary, gradient and convexity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kMalformed;
    }

    try {
        if (*weights) return cmd_weights(wopt);
        if (*simulate) {
            const auto cfg = experiment_config(sim_opt, {10, 25, 50, 100, 150, 200});
            const auto records = dw::run_simulation(cfg);
            write_output(sim_opt.common.output, [&](std::ostream& out) { dw::write_run_records(out, records); });
            return kOk;
        }
        if (*stability) {
            const auto cfg = experiment_config(stab_opt, {25, 50, 100, 200});
            const auto rows = dw::run_stability(cfg);
            write_output(stab_opt.common.output, [&](std::ostream& out) { dw::write_stability(out, rows); });
            return kOk;
        }
        if (*robustness) {
            dw::RobustnessConfig cfg;
            cfg.base = experiment_config(rob_opt, {10, 50, 200});
            cfg.c_values = dw::parse_number_list(rob_opt.c);
            cfg.penalties = parse_enum_list<dw::PenaltyKind>(rob_opt.penalty, dw::parse_penalty_kind);
            cfg.priors = parse_enum_list<dw::PriorKind>(rob_opt.prior, dw::parse_prior_kind);
            cfg.error_kinds = parse_enum_list<dw::ErrorKind>(rob_opt.errors, dw::parse_error_kind);
            const auto records = dw::run_robustness(cfg);
            write_output(rob_opt.common.output, [&](std::ostream& out) { dw::write_robustness(out, records); });
            return kOk;
        }
        if (*convergence) {
            dw::ConvergenceConfig cfg;
            cfg.scenario = dw::parse_scenario(conv_scenario);
            cfg.n_grid = parse_sizes(conv_grid);
            cfg.replications = conv_opt.replications;
            cfg.holdout = conv_holdout;
            cfg.base_seed = conv_opt.seed;
            cfg.jobs = conv_opt.jobs;
            const auto rows = dw::run_convergence(cfg);
            write_output(conv_opt.output, [&](std::ostream& out) { dw::write_convergence(out, rows); });
            return kOk;
        }
        if (*selftest) return report_selftest(dw::run_selftest());
    } catch (const dw::CsvParseError& e) {
        std::cerr << "error: malformed input: " << e.what() << '\n';
        return kMalformed;
    } catch (const dw::DimensionError& e) {
        std::cerr << "error: dimension mismatch: " << e.what() << '\n';
        return kDimension;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kMalformed;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return kMalformed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
