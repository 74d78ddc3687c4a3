#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace divweight {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Design matrix X (n x p, one observation per row) and response y.
struct RegressionDataset {
    RowMajorMatrix X;
    Eigen::VectorXd y;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    std::size_t predictors() const { return static_cast<std::size_t>(X.cols()); }

    std::span<const double> row(std::size_t i) const {
        return {X.data() + static_cast<Eigen::Index>(i) * X.cols(), static_cast<std::size_t>(X.cols())};
    }

    /// Throws std::invalid_argument on NaN entries or mismatched shapes.
    void validate() const;
};

} // namespace divweight
