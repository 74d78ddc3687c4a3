#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divweight/gaussian.hpp"
#include "divweight/simplex_solver.hpp"
#include "divweight/types.hpp"

namespace divweight {

enum class Scenario { NonsparseIndep, NonsparseCorr, SparseIndep, SparseCorr };
enum class Method { DW, Stack, New };
enum class PriorKind { Optimism, Uniform };

std::string to_string(Scenario s);
std::string to_string(Method m);
std::string to_string(PriorKind p);
Scenario parse_scenario(const std::string& text);
Method parse_method(const std::string& text);
PriorKind parse_prior_kind(const std::string& text);

DgpConfig dgp_for(Scenario s, ErrorKind errors, std::size_t predictors = 20);
PenaltyConfig penalty_for(PenaltyKind kind, double c, PriorKind prior);

/// Mixes a base seed with stream identifiers into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

struct ExperimentConfig {
    std::vector<Scenario> scenarios{Scenario::NonsparseIndep};
    std::vector<std::size_t> n_grid{10, 25, 50, 100, 150, 200};
    std::size_t replications = 200;
    std::size_t test_size = 200;
    std::uint64_t base_seed = 1;
    std::vector<Method> methods{Method::DW, Method::Stack, Method::New};
    std::size_t models = 10;
    std::size_t predictors = 20;
    std::size_t folds = 5;
    ErrorKind error_kind = ErrorKind::Gaussian;
    /// Penalty used by the dw method.
    PenaltyConfig penalty;
    SolverConfig solver;
    std::size_t jobs = 1;

    void validate() const;
};

struct RunRecord {
    Scenario scenario = Scenario::NonsparseIndep;
    std::size_t n = 0;
    std::size_t replication = 0;
    Method method = Method::DW;
    double rmse = 0.0;
    double mean_log_score = 0.0;
    Eigen::VectorXd weights;
    std::uint64_t seed = 0;
    bool solver_converged = true;
};

/// One fitted replication: models fit on a training set of size n, CV
/// optimism, and log densities on train, held-out and test rows.
struct Replication {
    std::vector<GaussianLinearModel> models;
    LogDensityMatrix train;
    LogDensityMatrix heldout;
    OptimismVector optimism;
    RegressionDataset test;
    LogDensityMatrix test_log_density;
};

struct ReplicationSeeds {
    std::uint64_t train = 0;
    std::uint64_t test = 0;
    std::uint64_t folds = 0;
};

Replication prepare_replication(const GroundTruth& truth, const ModelSpace& space, std::size_t n,
                                std::size_t test_size, std::size_t folds, const ReplicationSeeds& seeds);

struct MethodWeights {
    SimplexWeights weights;
    bool converged = true;
};

/// dw: divergence weights on the training matrix with `penalty`;
/// stack: stacking on the held-out matrix;
/// new: softmax of -(optimism + in-sample deviance).
MethodWeights compute_method_weights(Method method, const Replication& rep, const PenaltyConfig& penalty,
                                     const SolverConfig& solver);

/// Runs every (scenario, n, replication, method) cell. Records are sorted by
/// (scenario, n, replication, method) and do not depend on `jobs`.
std::vector<RunRecord> run_simulation(const ExperimentConfig& cfg);

void write_run_records(std::ostream& out, const std::vector<RunRecord>& records);

struct StabilityRow {
    Scenario scenario = Scenario::NonsparseIndep;
    Method method = Method::DW;
    std::size_t n = 0;
    std::size_t replications = 0;
    /// Across-replication sd of each weight component, averaged over components.
    double mean_weight_sd = 0.0;
};

/// Fixes one ground truth and model space (from base_seed) per scenario and
/// varies only the data across replications.
std::vector<StabilityRow> run_stability(const ExperimentConfig& cfg);
void write_stability(std::ostream& out, const std::vector<StabilityRow>& rows);

struct RobustnessConfig {
    ExperimentConfig base;
    std::vector<double> c_values{0.5, 1.0, 2.0};
    std::vector<PenaltyKind> penalties{PenaltyKind::KL, PenaltyKind::Brier};
    std::vector<PriorKind> priors{PriorKind::Optimism, PriorKind::Uniform};
    std::vector<ErrorKind> error_kinds{ErrorKind::Gaussian, ErrorKind::StudentT3};

    void validate() const;
};

struct RobustnessRecord {
    RunRecord run;
    ErrorKind error_kind = ErrorKind::Gaussian;
    /// Set for dw rows only; stack and new do not use a penalty.
    std::optional<PenaltyKind> penalty;
    std::optional<double> c;
    std::optional<PriorKind> prior;
};

/// Every dw variant in the (c x penalty x prior) grid, plus stack and new when
/// selected, under each error kind. Variants share fits within a replication.
std::vector<RobustnessRecord> run_robustness(const RobustnessConfig& cfg);
void write_robustness(std::ostream& out, const std::vector<RobustnessRecord>& records);

struct ConvergenceConfig {
    Scenario scenario = Scenario::NonsparseIndep;
    std::vector<std::size_t> n_grid{50, 200, 800};
    std::size_t replications = 100;
    std::size_t holdout = 10000;
    std::size_t models = 10;
    std::size_t predictors = 20;
    std::size_t folds = 5;
    std::uint64_t base_seed = 1;
    SolverConfig solver;
    std::size_t jobs = 1;

    void validate() const;
};

struct ConvergenceRow {
    std::size_t n = 0;
    std::size_t replications = 0;
    /// Median over replications of |objective - n * holdout log score| / n.
    double median_gap = 0.0;
    double mean_gap = 0.0;
    double median_entropy_term = 0.0;
    double max_entropy_term = 0.0;
    double median_optimism_term = 0.0;
};

/// Gap between the dw objective at its optimum and the plug-in estimate of
/// the expected mixture log loss, per observation.
std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& cfg);
void write_convergence(std::ostream& out, const std::vector<ConvergenceRow>& rows);

} // namespace divweight
