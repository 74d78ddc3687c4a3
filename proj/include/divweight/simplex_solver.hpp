#pragma once

#include <cstddef>
#include <functional>
#include <variant>

#include <Eigen/Dense>

#include "divweight/types.hpp"

namespace divweight {

struct UniformStart {};
/// Start at the prior weights of the weighting problem. Only meaningful to
/// callers that know a prior (divergence_weights resolves it).
struct PriorStart {};
using InitialPoint = std::variant<UniformStart, PriorStart, SimplexWeights>;

struct SolverConfig {
    double tolerance = 1e-8;
    std::size_t max_iterations = 10000;
    InitialPoint initial_point = UniformStart{};
    /// Components below this are rounded to zero after termination.
    double floor = 1e-12;

    void validate() const;
};

struct SolverReport {
    double objective = 0.0;
    std::size_t iterations = 0;
    /// max |g_k - lambda| over components above the floor, divided by (1 + |objective|).
    double kkt_residual = 0.0;
    bool converged = false;
    double wall_time = 0.0;
};

/// A smooth convex function on the simplex. `value` must accept boundary
/// points; `gradient` is only called at interior points.
struct SimplexObjective {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct SolverResult {
    SimplexWeights weights;
    SolverReport report;
};

/// Exponentiated-gradient (mirror descent) minimizer over the K-simplex.
///
/// Each step is w_k <- y_k exp(-eta g_k(y)) / Z, where y extrapolates the
/// last two iterates in log-weight coordinates (Nesterov momentum, restarted
/// whenever the extrapolated step fails to descend). eta is found by
/// backtracking (halving, Armijo constant 1e-4); the first trial step is 1.0
/// and later iterations start from twice the last accepted step. Accepted
/// iterates never increase the objective. Iterates stay strictly positive,
/// so gradients with a log barrier (entropy terms) stay defined.
///
/// Small components whose gradient exceeds the multiplier are also offered
/// for removal (parked just below the floor) in a trial point that is kept
/// only if the objective does not increase. Near the optimum, where decreases
/// fall below the rounding noise of the objective, a step is also accepted
/// when the gradient at the trial point certifies descent by convexity.
///
/// Terminates when the relative KKT residual is below `tolerance` and no
/// component at the floor has a gradient below the multiplier.
/// Throws NonFiniteError if the objective or gradient is not finite at an
/// iterate.
SolverResult minimize_on_simplex(const SimplexObjective& objective, std::size_t k, const SolverConfig& cfg);

/// KKT residual of `w` with gradient `g`: max |g_k - lambda| over w_k > floor,
/// lambda = sum_k w_k g_k. Unscaled.
double kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double floor);

} // namespace divweight
