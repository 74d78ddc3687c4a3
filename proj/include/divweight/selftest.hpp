#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divweight/types.hpp"

namespace divweight {

/// Random weighting problem: Gaussian log densities of standard normal draws
/// under K shifted and scaled normal models, with optimism uniform on [0, 3].
struct RandomInstance {
    LogDensityMatrix matrix;
    OptimismVector optimism;
};

RandomInstance make_random_instance(std::mt19937_64& rng, std::size_t n, std::size_t k);

/// Uniform draw from the simplex (Dirichlet(1, ..., 1)).
Eigen::VectorXd random_simplex_point(std::mt19937_64& rng, std::size_t k);

struct GridOracleResult {
    Eigen::VectorXd argmin;
    double value = 0.0;
};

/// Exhaustive search over the barycentric grid {w : w_k = j_k * step} for
/// K = 2 or 3. Evaluates the divergence objective from its definition with
/// precomputed row-shifted exponentials; shares no code with the solver.
GridOracleResult grid_oracle_divergence(const LogDensityMatrix& matrix, const OptimismVector& op,
                                        const PenaltyConfig& cfg, double step);
GridOracleResult grid_oracle_stacking(const LogDensityMatrix& heldout, double step);

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const LogDensityMatrix&,
                                                 const OptimismVector&, const PenaltyConfig&)>;

struct SelfTestOptions {
    /// Gradient under test; replaced by fixtures to check suite sensitivity.
    GradientFn gradient;
    std::uint64_t seed = 20240601;
};

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Runs the grid-oracle, boundary-condition, gradient and convexity suites.
std::vector<SuiteResult> run_selftest(const SelfTestOptions& options = {});

} // namespace divweight
