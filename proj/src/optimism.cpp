#include "divweight/optimism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace divweight {

void RegressionDataset::validate() const {
    if (X.rows() != y.size()) throw std::invalid_argument("design rows and response length differ");
    if (X.hasNaN() || y.hasNaN()) throw std::invalid_argument("dataset contains NaN entries");
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) rows.push_back(i);
    }
    return rows;
}

std::vector<std::size_t> FoldPlan::complement_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) rows.push_back(i);
    }
    return rows;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(fold_count, 0);
    for (std::size_t f : fold_of) ++sizes[f];
    return sizes;
}

FoldPlan make_folds(std::size_t n, std::size_t fold_count, std::uint64_t seed) {
    if (fold_count < 2) throw std::invalid_argument("need at least two folds");
    if (n < fold_count) {
        throw std::invalid_argument("cannot split " + std::to_string(n) + " observations into " +
                                    std::to_string(fold_count) + " folds");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    FoldPlan plan;
    plan.n = n;
    plan.fold_count = fold_count;
    plan.seed = seed;
    plan.fold_of.assign(n, 0);
    const std::size_t base = n / fold_count;
    const std::size_t extra = n % fold_count;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < fold_count; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) plan.fold_of[perm[pos++]] = f;
    }
    return plan;
}

FitError::FitError(std::optional<std::size_t> fold, const std::string& what)
    : std::runtime_error(fold ? "fit failed on complement of fold " + std::to_string(*fold) + ": " + what
                              : "fit failed on the full data: " + what),
      fold_(fold) {}

CvOptimism cv_optimism(const ModelAdapter& adapter, const RegressionDataset& data, const FoldPlan& plan) {
    if (plan.n != data.size() || plan.fold_of.size() != data.size()) {
        throw std::invalid_argument("fold plan does not match the dataset size");
    }
    const auto n = static_cast<Eigen::Index>(data.size());
    CvOptimism out;
    out.full_fit_log_density.resize(n);
    out.heldout_log_density.resize(n);

    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::unique_ptr<FittedPredictor> full;
    try {
        full = adapter.fit(data, all);
    } catch (const std::exception& e) {
        throw FitError(std::nullopt, e.what());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out.full_fit_log_density(i) = full->log_density(data.row(static_cast<std::size_t>(i)), data.y(i));
    }

    for (std::size_t f = 0; f < plan.fold_count; ++f) {
        std::unique_ptr<FittedPredictor> partial;
        try {
            partial = adapter.fit(data, plan.complement_rows(f));
        } catch (const std::exception& e) {
            throw FitError(f, e.what());
        }
        for (std::size_t i : plan.fold_rows(f)) {
            out.heldout_log_density(static_cast<Eigen::Index>(i)) =
                partial->log_density(data.row(i), data.y(static_cast<Eigen::Index>(i)));
        }
    }

    out.optimism = -out.heldout_log_density.sum() + out.full_fit_log_density.sum();
    return out;
}

double aicc_penalty(std::size_t num_params, std::size_t n) {
    if (n <= num_params + 1) {
        throw std::domain_error("AICc penalty needs n > c + 1 (got c = " + std::to_string(num_params) +
                                ", n = " + std::to_string(n) + ")");
    }
    const auto c = static_cast<double>(num_params);
    return c + c * (c + 1.0) / (static_cast<double>(n) - c - 1.0);
}

} // namespace divweight
