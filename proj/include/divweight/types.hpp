#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace divweight {

/// Two inputs disagree on the number of models or observations.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An evaluation produced NaN or infinity where a finite value is required.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n x K table of natural-log pointwise predictive densities.
///
/// Row i holds log p_k(y_i) for every model k. Entries must be finite and the
/// matrix must have at least one column; zero rows are allowed.
class LogDensityMatrix {
public:
    explicit LogDensityMatrix(Eigen::MatrixXd values, std::vector<std::string> labels = {});

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t models() const { return static_cast<std::size_t>(values_.cols()); }

    double operator()(std::size_t i, std::size_t k) const {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }

    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> labels_;
};

/// A point of the probability simplex: nonnegative, sums to one.
class SimplexWeights {
public:
    static constexpr double kSumTolerance = 1e-12;

    /// Throws std::invalid_argument when `w` is not on the simplex.
    explicit SimplexWeights(Eigen::VectorXd w);

    /// Divides a nonnegative vector with positive mass by its sum.
    static SimplexWeights normalized(const Eigen::VectorXd& v);
    static SimplexWeights uniform(std::size_t k);
    static SimplexWeights vertex(std::size_t k, std::size_t index);

    std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
    double operator[](std::size_t k) const { return w_(static_cast<Eigen::Index>(k)); }
    const Eigen::VectorXd& values() const { return w_; }

    bool is_interior() const { return (w_.array() > 0.0).all(); }

private:
    Eigen::VectorXd w_;
};

/// Per-model optimism in summed log-density units. Entries may be negative.
class OptimismVector {
public:
    explicit OptimismVector(Eigen::VectorXd op);
    static OptimismVector zeros(std::size_t k);

    std::size_t size() const { return static_cast<std::size_t>(op_.size()); }
    double operator[](std::size_t k) const { return op_(static_cast<Eigen::Index>(k)); }
    const Eigen::VectorXd& values() const { return op_; }

private:
    Eigen::VectorXd op_;
};

enum class PenaltyKind { KL, Brier };

struct OptimismPenalizingPrior {};
struct UniformPrior {};
using PriorChoice = std::variant<OptimismPenalizingPrior, UniformPrior, SimplexWeights>;

/// Divergence penalty between the fitted weights and the prior weights,
/// scaled by `scale_c`.
struct PenaltyConfig {
    PenaltyKind kind = PenaltyKind::KL;
    double scale_c = 1.0;
    PriorChoice prior = OptimismPenalizingPrior{};

    /// Throws std::invalid_argument on a nonpositive scale or an explicit KL
    /// prior with a zero component.
    void validate() const;
};

struct DiagnosticsReport {
    double jensen_gap_out = 0.0;
    double jensen_gap_in = 0.0;
    Eigen::VectorXd overfit_ratios;
    double min_overfit_ratio = 0.0;
};

std::string to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(const std::string& text);

} // namespace divweight
