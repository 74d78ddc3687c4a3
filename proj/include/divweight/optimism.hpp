#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divweight/dataset.hpp"

namespace divweight {

/// Assignment of n observations to F folds.
struct FoldPlan {
    std::size_t n = 0;
    std::size_t fold_count = 5;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_of;
    /// Reserved; stratified plans are not produced by make_folds.
    bool stratified = false;

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> complement_rows(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

/// Seeded uniform permutation cut into F contiguous blocks; the first
/// n mod F folds receive one extra observation. Requires n >= F >= 2.
FoldPlan make_folds(std::size_t n, std::size_t fold_count = 5, std::uint64_t seed = 0);

/// A model fitted to some rows of a dataset.
class FittedPredictor {
public:
    virtual ~FittedPredictor() = default;
    virtual double log_density(std::span<const double> x, double y) const = 0;
    virtual double predictive_mean(std::span<const double> x) const = 0;
};

/// Fitting procedure for one model. `fit` must be deterministic in its rows
/// and safe to call concurrently.
class ModelAdapter {
public:
    virtual ~ModelAdapter() = default;
    virtual std::unique_ptr<FittedPredictor> fit(const RegressionDataset& data,
                                                 std::span<const std::size_t> rows) const = 0;
};

/// Raised when an adapter fails; `fold` is empty for the full-data fit.
class FitError : public std::runtime_error {
public:
    FitError(std::optional<std::size_t> fold, const std::string& what);
    std::optional<std::size_t> fold() const { return fold_; }

private:
    std::optional<std::size_t> fold_;
};

struct CvOptimism {
    /// Held-out deviance minus full-fit deviance.
    double optimism = 0.0;
    /// log density of each observation under the full-data fit.
    Eigen::VectorXd full_fit_log_density;
    /// log density of each observation under the fit that excluded its fold.
    Eigen::VectorXd heldout_log_density;
};

/// K-fold cross-validation estimate of one model's optimism.
CvOptimism cv_optimism(const ModelAdapter& adapter, const RegressionDataset& data, const FoldPlan& plan);

/// Small-sample corrected AIC penalty c + c(c+1)/(n-c-1). Throws
/// std::domain_error when n <= c + 1.
double aicc_penalty(std::size_t num_params, std::size_t n);

} // namespace divweight
