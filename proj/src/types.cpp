#include "divweight/types.hpp"

#include <cmath>
#include <sstream>

namespace divweight {

LogDensityMatrix::LogDensityMatrix(Eigen::MatrixXd values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.cols() < 1) {
        throw std::invalid_argument("log-density matrix needs at least one model column");
    }
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        for (Eigen::Index k = 0; k < values_.cols(); ++k) {
            if (!std::isfinite(values_(i, k))) {
                std::ostringstream msg;
                msg << "non-finite log density at row " << i << ", model " << k;
                throw std::invalid_argument(msg.str());
            }
        }
    }
    if (labels_.empty()) {
        for (Eigen::Index k = 0; k < values_.cols(); ++k) {
            labels_.push_back("m" + std::to_string(k));
        }
    } else if (labels_.size() != static_cast<std::size_t>(values_.cols())) {
        throw DimensionError("label count does not match the number of model columns");
    }
}

SimplexWeights::SimplexWeights(Eigen::VectorXd w) : w_(std::move(w)) {
    if (w_.size() < 1) {
        throw std::invalid_argument("simplex weights need at least one component");
    }
    for (Eigen::Index k = 0; k < w_.size(); ++k) {
        if (!(w_(k) >= 0.0 && w_(k) <= 1.0)) {
            std::ostringstream msg;
            msg << "weight component " << k << " = " << w_(k) << " is outside [0, 1]";
            throw std::invalid_argument(msg.str());
        }
    }
    const double total = w_.sum();
    if (std::abs(total - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "weights sum to " << total << ", not 1";
        throw std::invalid_argument(msg.str());
    }
}

SimplexWeights SimplexWeights::normalized(const Eigen::VectorXd& v) {
    if (v.size() < 1 || (v.array() < 0.0).any() || !v.allFinite()) {
        throw std::invalid_argument("cannot normalize: entries must be finite and nonnegative");
    }
    const double total = v.sum();
    if (!(total > 0.0)) {
        throw std::invalid_argument("cannot normalize a vector with zero mass");
    }
    return SimplexWeights(v / total);
}

SimplexWeights SimplexWeights::uniform(std::size_t k) {
    return SimplexWeights(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k)));
}

SimplexWeights SimplexWeights::vertex(std::size_t k, std::size_t index) {
    if (index >= k) {
        throw std::out_of_range("vertex index out of range");
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    w(static_cast<Eigen::Index>(index)) = 1.0;
    return SimplexWeights(std::move(w));
}

OptimismVector::OptimismVector(Eigen::VectorXd op) : op_(std::move(op)) {
    if (!op_.allFinite()) {
        throw std::invalid_argument("optimism entries must be finite");
    }
}

OptimismVector OptimismVector::zeros(std::size_t k) {
    return OptimismVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)));
}

void PenaltyConfig::validate() const {
    if (!(scale_c > 0.0) || !std::isfinite(scale_c)) {
        throw std::invalid_argument("penalty scale c must be a positive finite number");
    }
    if (const auto* explicit_prior = std::get_if<SimplexWeights>(&prior)) {
        if (kind == PenaltyKind::KL && !explicit_prior->is_interior()) {
            throw std::invalid_argument("an explicit prior under the KL penalty needs strictly positive components");
        }
    }
}

std::string to_string(PenaltyKind kind) {
    return kind == PenaltyKind::KL ? "kl" : "brier";
}

PenaltyKind parse_penalty_kind(const std::string& text) {
    if (text == "kl" || text == "KL") return PenaltyKind::KL;
    if (text == "brier" || text == "Brier") return PenaltyKind::Brier;
    throw std::invalid_argument("unknown penalty kind '" + text + "' (expected kl or brier)");
}

} // namespace divweight
