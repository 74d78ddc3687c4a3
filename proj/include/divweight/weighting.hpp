#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "divweight/simplex_solver.hpp"
#include "divweight/types.hpp"

namespace divweight {

/// Softmax of the negated optimism: w_k = exp(-op_k) / sum_j exp(-op_j).
SimplexWeights optimism_prior(const OptimismVector& op);

/// w_k proportional to exp(-s_k), computed with a max shift.
SimplexWeights negative_exponentiated_weights(const Eigen::VectorXd& scores);

/// Index minimizing -sum_i L_ik + op_k. Exact ties go to the lowest index.
std::size_t model_selection_index(const LogDensityMatrix& matrix, const OptimismVector& op);

/// Per-model selection criterion -sum_i L_ik + op_k.
Eigen::VectorXd selection_criteria(const LogDensityMatrix& matrix, const OptimismVector& op);

/// log sum_k w_k exp(L_ik) for every row, over the components with w_k > 0.
Eigen::VectorXd row_log_mixture(const Eigen::VectorXd& w, const LogDensityMatrix& matrix);

/// Penalized negative log mixture likelihood.
///
/// KL:    c * (sum_k w_k log w_k + sum_k w_k a_k) - sum_i log sum_k w_k exp(L_ik)
/// Brier: c * sum_k (w_k - t_k)^2                 - (same fit term)
///
/// With the optimism prior a = op and t = optimism_prior(op); the uniform
/// prior uses a = 0 and t = 1/K; an explicit prior p uses a = -log p and t = p.
/// The KL value omits the w-independent normalizer c * log sum_j exp(-a_j).
/// Zero components contribute 0 to w log w.
double divergence_objective(const SimplexWeights& w, const LogDensityMatrix& matrix, const OptimismVector& op,
                            const PenaltyConfig& cfg);

/// Same objective evaluated at an arbitrary nonnegative vector (used by the solver).
double divergence_objective(const Eigen::VectorXd& w, const LogDensityMatrix& matrix, const OptimismVector& op,
                            const PenaltyConfig& cfg);

/// Analytic gradient of divergence_objective. Under KL every component of w
/// must be strictly positive (throws std::domain_error otherwise).
Eigen::VectorXd divergence_objective_gradient(const Eigen::VectorXd& w, const LogDensityMatrix& matrix,
                                              const OptimismVector& op, const PenaltyConfig& cfg);

/// Minimizer of divergence_objective over the simplex.
SolverResult divergence_weights(const LogDensityMatrix& matrix, const OptimismVector& op, const PenaltyConfig& cfg,
                                const SolverConfig& solver = {});

/// Minimizer of -sum_i log sum_k w_k exp(L_ik) over the simplex, where the
/// rows are held-out (cross-validated) log densities. Starts from the uniform
/// point unless the solver config says otherwise, so columns that are exact
/// duplicates share their weight equally.
SolverResult stacking_weights(const LogDensityMatrix& heldout, const SolverConfig& solver = {});

/// Objective whose minimizer is the negative exponentiated weighting:
/// sum_k w_k log(w_k / prior_k) + sum_k w_k s_k. The minimizer is
/// proportional to prior_k exp(-s_k).
double negexp_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, const SimplexWeights& prior);
Eigen::VectorXd negexp_objective_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& scores,
                                          const SimplexWeights& prior);

/// Mean negative log mixture density over rows. Requires at least one row.
double mixture_log_score(const SimplexWeights& w, const LogDensityMatrix& matrix);

/// Jensen gaps on test (out) and train (in) rows plus per-model overfit
/// ratios (test deviance / train deviance). Throws std::domain_error naming
/// the model when a train deviance is not positive.
DiagnosticsReport diagnostics(const SimplexWeights& w, const LogDensityMatrix& train, const LogDensityMatrix& test);

} // namespace divweight
