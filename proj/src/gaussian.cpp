#include "divweight/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace divweight {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

class FittedGaussian final : public FittedPredictor {
public:
    explicit FittedGaussian(GaussianLinearModel model) : model_(std::move(model)) {}
    double log_density(std::span<const double> x, double y) const override {
        return divweight::log_density(model_, x, y);
    }
    double predictive_mean(std::span<const double> x) const override { return model_.mean(x); }

private:
    GaussianLinearModel model_;
};

} // namespace

std::string to_string(ErrorKind kind) { return kind == ErrorKind::Gaussian ? "gaussian" : "student_t3"; }

ErrorKind parse_error_kind(const std::string& text) {
    if (text == "gaussian") return ErrorKind::Gaussian;
    if (text == "student_t3" || text == "t3") return ErrorKind::StudentT3;
    throw std::invalid_argument("unknown error kind '" + text + "' (expected gaussian or student_t3)");
}

void DgpConfig::validate() const {
    if (p < 1) throw std::invalid_argument("need at least one predictor");
    if (!(beta_sd > 0.0 && alpha_sd > 0.0 && noise_sd > 0.0)) {
        throw std::invalid_argument("standard deviations must be positive");
    }
}

GroundTruth generate_ground_truth(const DgpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> beta_dist(0.0, cfg.beta_sd);
    std::normal_distribution<double> alpha_dist(0.0, cfg.alpha_sd);

    GroundTruth truth;
    truth.config = cfg;
    truth.beta.resize(static_cast<Eigen::Index>(cfg.p));
    for (Eigen::Index j = 0; j < truth.beta.size(); ++j) truth.beta(j) = beta_dist(rng);
    truth.alpha = alpha_dist(rng);
    if (cfg.sparse) {
        std::vector<std::size_t> idx(cfg.p);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t j = 0; j < cfg.p / 2; ++j) truth.beta(static_cast<Eigen::Index>(idx[j])) = 0.0;
    }
    return truth;
}

RegressionDataset sample_dataset(const GroundTruth& truth, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("dataset size must be at least 1");
    const auto& cfg = truth.config;
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(cfg.p);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::student_t_distribution<double> student(3.0);

    RegressionDataset data;
    data.X.resize(rows, cols);
    data.y.resize(rows);
    const double half = std::sqrt(0.5);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double common = cfg.correlated ? std_normal(rng) : 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double z = std_normal(rng);
            data.X(i, j) = cfg.correlated ? half * common + half * z : z;
        }
        const double eps = cfg.error_kind == ErrorKind::Gaussian ? cfg.noise_sd * std_normal(rng)
                                                                  : cfg.noise_sd * student(rng);
        data.y(i) = data.X.row(i).dot(truth.beta) + truth.alpha + eps;
    }
    return data;
}

ModelSpace build_model_space(std::size_t p, std::size_t k, std::uint64_t seed) {
    if (p < 5) throw std::invalid_argument("model space needs at least 5 predictors");
    if (k < 1) throw std::invalid_argument("model space needs at least one model");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size_dist(1, 5);
    ModelSpace space;
    std::vector<std::size_t> columns(p);
    for (std::size_t model = 0; model < k; ++model) {
        const std::size_t m = size_dist(rng);
        std::iota(columns.begin(), columns.end(), std::size_t{0});
        // Partial Fisher-Yates: the first m entries are a uniform m-subset.
        for (std::size_t j = 0; j < m; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, p - 1);
            std::swap(columns[j], columns[pick(rng)]);
        }
        space.subsets.emplace_back(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(m));
    }
    return space;
}

double GaussianLinearModel::mean(std::span<const double> x) const {
    double mu = alpha_hat;
    for (std::size_t j = 0; j < predictor_subset.size(); ++j) {
        mu += beta_hat(static_cast<Eigen::Index>(j)) * x[predictor_subset[j]];
    }
    return mu;
}

GaussianLinearModel fit_mle(const RegressionDataset& data, const std::vector<std::size_t>& subset,
                            std::span<const std::size_t> rows) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(data.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        rows = all;
    }
    if (rows.empty()) throw std::invalid_argument("cannot fit a model to an empty dataset");
    for (std::size_t j : subset) {
        if (j >= data.predictors()) throw std::out_of_range("predictor index out of range");
    }
    if (std::any_of(subset.begin(), subset.end(),
                    [&](std::size_t j) { return std::count(subset.begin(), subset.end(), j) > 1; })) {
        throw std::invalid_argument("predictor subset has duplicate indices");
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd design(n, m + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        design(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < m; ++j) design(i, j + 1) = data.X(r, static_cast<Eigen::Index>(subset[j]));
        y(i) = data.y(r);
    }

    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(y);
    const double rss = (y - design * coef).squaredNorm();

    GaussianLinearModel model;
    model.predictor_subset = subset;
    model.alpha_hat = coef(0);
    model.beta_hat = coef.tail(m);
    model.sigma_hat = std::max(std::sqrt(rss / static_cast<double>(n)), GaussianLinearModel::kSigmaFloor);
    return model;
}

double log_density(const GaussianLinearModel& model, std::span<const double> x, double y) {
    const double z = (y - model.mean(x)) / model.sigma_hat;
    return -kHalfLog2Pi - std::log(model.sigma_hat) - 0.5 * z * z;
}

double mixture_rmse(const SimplexWeights& w, const std::vector<GaussianLinearModel>& models,
                    const RegressionDataset& test) {
    if (w.size() != models.size()) throw DimensionError("weight count does not match the number of models");
    if (test.size() == 0) throw std::invalid_argument("RMSE needs a nonempty test set");
    double sse = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto x = test.row(i);
        double pred = 0.0;
        for (std::size_t k = 0; k < models.size(); ++k) pred += w[k] * models[k].mean(x);
        const double r = test.y(static_cast<Eigen::Index>(i)) - pred;
        sse += r * r;
    }
    return std::sqrt(sse / static_cast<double>(test.size()));
}

LogDensityMatrix log_density_matrix(const std::vector<GaussianLinearModel>& models, const RegressionDataset& data) {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(models.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.row(i);
        for (std::size_t k = 0; k < models.size(); ++k) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                log_density(models[k], x, data.y(static_cast<Eigen::Index>(i)));
        }
    }
    return LogDensityMatrix(std::move(values));
}

std::unique_ptr<FittedPredictor> GaussianLinearAdapter::fit(const RegressionDataset& data,
                                                            std::span<const std::size_t> rows) const {
    if (rows.empty()) throw std::invalid_argument("no rows to fit");
    return std::make_unique<FittedGaussian>(fit_mle(data, subset_, rows));
}

} // namespace divweight
