#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divweight/dataset.hpp"
#include "divweight/optimism.hpp"
#include "divweight/types.hpp"

namespace divweight {

enum class ErrorKind { Gaussian, StudentT3 };

std::string to_string(ErrorKind kind);
ErrorKind parse_error_kind(const std::string& text);

/// Data-generating process y = X beta + alpha + eps. The sd fields are
/// standard deviations.
struct DgpConfig {
    std::size_t p = 20;
    double beta_sd = 0.5;
    double alpha_sd = 2.0;
    double noise_sd = 5.0;
    bool sparse = false;
    /// Columns with pairwise correlation 0.5 instead of independent columns.
    bool correlated = false;
    ErrorKind error_kind = ErrorKind::Gaussian;

    void validate() const;
};

struct GroundTruth {
    Eigen::VectorXd beta;
    double alpha = 0.0;
    DgpConfig config;
};

GroundTruth generate_ground_truth(const DgpConfig& cfg, std::uint64_t seed);

/// Draws n rows. Correlated designs use x_ij = sqrt(.5) g_i + sqrt(.5) z_ij;
/// Student-t errors are noise_sd * t_3.
RegressionDataset sample_dataset(const GroundTruth& truth, std::size_t n, std::uint64_t seed);

/// Predictor subsets of the candidate models (intercept implied).
struct ModelSpace {
    std::vector<std::vector<std::size_t>> subsets;

    std::size_t size() const { return subsets.size(); }
};

/// K models, each with m ~ U{1..5} distinct predictors out of p. Duplicate
/// subsets across models are kept.
ModelSpace build_model_space(std::size_t p, std::size_t k, std::uint64_t seed);

struct GaussianLinearModel {
    static constexpr double kSigmaFloor = 1e-6;

    std::vector<std::size_t> predictor_subset;
    Eigen::VectorXd beta_hat;
    double alpha_hat = 0.0;
    double sigma_hat = 1.0;

    double mean(std::span<const double> x) const;
};

/// Maximum likelihood fit with intercept on the given rows (all rows when
/// `rows` is empty). Rank-deficient designs get the minimum-norm
/// least-squares solution. sigma_hat = max(sqrt(RSS / n), 1e-6).
GaussianLinearModel fit_mle(const RegressionDataset& data, const std::vector<std::size_t>& subset,
                            std::span<const std::size_t> rows = {});

/// Normal log density of y under the fitted model at input x.
double log_density(const GaussianLinearModel& model, std::span<const double> x, double y);

/// RMSE of the weighted mean prediction sum_k w_k mu_k(x) on `test`.
double mixture_rmse(const SimplexWeights& w, const std::vector<GaussianLinearModel>& models,
                    const RegressionDataset& test);

/// n x K log densities of every model on every row of `data`.
LogDensityMatrix log_density_matrix(const std::vector<GaussianLinearModel>& models, const RegressionDataset& data);

/// ModelAdapter fitting a Gaussian linear model on a fixed predictor subset.
class GaussianLinearAdapter final : public ModelAdapter {
public:
    explicit GaussianLinearAdapter(std::vector<std::size_t> subset) : subset_(std::move(subset)) {}

    std::unique_ptr<FittedPredictor> fit(const RegressionDataset& data,
                                         std::span<const std::size_t> rows) const override;

private:
    std::vector<std::size_t> subset_;
};

} // namespace divweight
