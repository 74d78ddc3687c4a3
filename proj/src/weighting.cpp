#include "divweight/weighting.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace divweight {

namespace {

void check_models(std::size_t expected, std::size_t actual, const char* what) {
    if (expected != actual) {
        throw DimensionError(std::string(what) + " has " + std::to_string(actual) + " entries, expected " +
                             std::to_string(expected));
    }
}

// Linear coefficients a_k of the KL penalty for the configured prior.
Eigen::VectorXd kl_linear_term(const OptimismVector& op, const PenaltyConfig& cfg) {
    if (std::holds_alternative<OptimismPenalizingPrior>(cfg.prior)) return op.values();
    if (std::holds_alternative<UniformPrior>(cfg.prior)) return Eigen::VectorXd::Zero(op.values().size());
    return -std::get<SimplexWeights>(cfg.prior).values().array().log();
}

// Target of the Brier penalty for the configured prior.
Eigen::VectorXd brier_target(const OptimismVector& op, const PenaltyConfig& cfg) {
    if (std::holds_alternative<OptimismPenalizingPrior>(cfg.prior)) return optimism_prior(op).values();
    if (std::holds_alternative<UniformPrior>(cfg.prior)) return SimplexWeights::uniform(op.size()).values();
    return std::get<SimplexWeights>(cfg.prior).values();
}

void check_prior_size(const PenaltyConfig& cfg, std::size_t k) {
    if (const auto* p = std::get_if<SimplexWeights>(&cfg.prior)) check_models(k, p->size(), "explicit prior");
}

// sum_i exp(L_ik - log mixture_i) for each k.
Eigen::VectorXd fit_gradient(const Eigen::VectorXd& w, const LogDensityMatrix& matrix) {
    const Eigen::VectorXd lse = row_log_mixture(w, matrix);
    const Eigen::MatrixXd& L = matrix.values();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(L.cols());
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        for (Eigen::Index k = 0; k < L.cols(); ++k) out(k) += std::exp(L(i, k) - lse(i));
    }
    return out;
}

double entropy_term(const Eigen::VectorXd& w) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w(k) > 0.0) s += w(k) * std::log(w(k));
    }
    return s;
}

} // namespace

SimplexWeights negative_exponentiated_weights(const Eigen::VectorXd& scores) {
    if (scores.size() < 1) throw std::invalid_argument("need at least one score");
    if (!scores.allFinite()) throw std::invalid_argument("scores must be finite");
    const double lowest = scores.minCoeff();
    Eigen::VectorXd w(scores.size());
    for (Eigen::Index k = 0; k < scores.size(); ++k) w(k) = std::exp(-(scores(k) - lowest));
    return SimplexWeights(w / w.sum());
}

SimplexWeights optimism_prior(const OptimismVector& op) { return negative_exponentiated_weights(op.values()); }

Eigen::VectorXd selection_criteria(const LogDensityMatrix& matrix, const OptimismVector& op) {
    check_models(matrix.models(), op.size(), "optimism vector");
    Eigen::VectorXd crit(op.values().size());
    for (Eigen::Index k = 0; k < crit.size(); ++k) crit(k) = -matrix.values().col(k).sum() + op.values()(k);
    return crit;
}

std::size_t model_selection_index(const LogDensityMatrix& matrix, const OptimismVector& op) {
    if (matrix.rows() < 1) throw std::invalid_argument("model selection needs at least one observation");
    const Eigen::VectorXd crit = selection_criteria(matrix, op);
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < crit.size(); ++k) {
        if (crit(k) < crit(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
    }
    return best;
}

Eigen::VectorXd row_log_mixture(const Eigen::VectorXd& w, const LogDensityMatrix& matrix) {
    check_models(matrix.models(), static_cast<std::size_t>(w.size()), "weight vector");
    const Eigen::MatrixXd& L = matrix.values();
    Eigen::VectorXd log_w(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        log_w(k) = w(k) > 0.0 ? std::log(w(k)) : -std::numeric_limits<double>::infinity();
    }
    Eigen::VectorXd out(L.rows());
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < L.cols(); ++k) {
            if (w(k) > 0.0) top = std::max(top, log_w(k) + L(i, k));
        }
        double acc = 0.0;
        for (Eigen::Index k = 0; k < L.cols(); ++k) {
            if (w(k) > 0.0) acc += std::exp(log_w(k) + L(i, k) - top);
        }
        out(i) = top + std::log(acc);
    }
    return out;
}

double divergence_objective(const Eigen::VectorXd& w, const LogDensityMatrix& matrix, const OptimismVector& op,
                            const PenaltyConfig& cfg) {
    const std::size_t k = matrix.models();
    check_models(k, static_cast<std::size_t>(w.size()), "weight vector");
    check_models(k, op.size(), "optimism vector");
    check_prior_size(cfg, k);

    double penalty = 0.0;
    if (cfg.kind == PenaltyKind::KL) {
        penalty = entropy_term(w) + w.dot(kl_linear_term(op, cfg));
    } else {
        penalty = (w - brier_target(op, cfg)).squaredNorm();
    }
    const double fit = matrix.rows() > 0 ? row_log_mixture(w, matrix).sum() : 0.0;
    const double value = cfg.scale_c * penalty - fit;
    if (!std::isfinite(value)) throw NonFiniteError("divergence objective evaluated to a non-finite value");
    return value;
}

double divergence_objective(const SimplexWeights& w, const LogDensityMatrix& matrix, const OptimismVector& op,
                            const PenaltyConfig& cfg) {
    return divergence_objective(w.values(), matrix, op, cfg);
}

Eigen::VectorXd divergence_objective_gradient(const Eigen::VectorXd& w, const LogDensityMatrix& matrix,
                                              const OptimismVector& op, const PenaltyConfig& cfg) {
    const std::size_t k = matrix.models();
    check_models(k, static_cast<std::size_t>(w.size()), "weight vector");
    check_models(k, op.size(), "optimism vector");
    check_prior_size(cfg, k);

    Eigen::VectorXd penalty_grad;
    if (cfg.kind == PenaltyKind::KL) {
        if ((w.array() <= 0.0).any()) {
            throw std::domain_error("KL gradient is undefined at a zero weight component");
        }
        penalty_grad = w.array().log() + 1.0 + kl_linear_term(op, cfg).array();
    } else {
        penalty_grad = 2.0 * (w - brier_target(op, cfg));
    }
    return cfg.scale_c * penalty_grad - fit_gradient(w, matrix);
}

SolverResult divergence_weights(const LogDensityMatrix& matrix, const OptimismVector& op, const PenaltyConfig& cfg,
                                const SolverConfig& solver) {
    cfg.validate();
    const std::size_t k = matrix.models();
    check_models(k, op.size(), "optimism vector");
    check_prior_size(cfg, k);

    SolverConfig resolved = solver;
    if (std::holds_alternative<PriorStart>(solver.initial_point)) {
        if (cfg.kind == PenaltyKind::KL) {
            resolved.initial_point = negative_exponentiated_weights(kl_linear_term(op, cfg));
        } else {
            resolved.initial_point = SimplexWeights::normalized(brier_target(op, cfg));
        }
    }
    SimplexObjective objective{
        [&](const Eigen::VectorXd& w) { return divergence_objective(w, matrix, op, cfg); },
        [&](const Eigen::VectorXd& w) { return divergence_objective_gradient(w, matrix, op, cfg); },
    };
    return minimize_on_simplex(objective, k, resolved);
}

SolverResult stacking_weights(const LogDensityMatrix& heldout, const SolverConfig& solver) {
    if (heldout.rows() < 1) throw std::invalid_argument("stacking needs at least one held-out observation");
    SolverConfig resolved = solver;
    if (std::holds_alternative<PriorStart>(solver.initial_point)) resolved.initial_point = UniformStart{};
    SimplexObjective objective{
        [&](const Eigen::VectorXd& w) {
            const double value = -row_log_mixture(w, heldout).sum();
            if (!std::isfinite(value)) throw NonFiniteError("stacking objective evaluated to a non-finite value");
            return value;
        },
        [&](const Eigen::VectorXd& w) { return Eigen::VectorXd(-fit_gradient(w, heldout)); },
    };
    return minimize_on_simplex(objective, heldout.models(), resolved);
}

double negexp_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& scores, const SimplexWeights& prior) {
    check_models(prior.size(), static_cast<std::size_t>(w.size()), "weight vector");
    check_models(prior.size(), static_cast<std::size_t>(scores.size()), "score vector");
    double value = w.dot(scores);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w(k) > 0.0) value += w(k) * (std::log(w(k)) - std::log(prior.values()(k)));
    }
    return value;
}

Eigen::VectorXd negexp_objective_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& scores,
                                          const SimplexWeights& prior) {
    check_models(prior.size(), static_cast<std::size_t>(w.size()), "weight vector");
    check_models(prior.size(), static_cast<std::size_t>(scores.size()), "score vector");
    return (w.array().log() - prior.values().array().log() + 1.0 + scores.array()).matrix();
}

double mixture_log_score(const SimplexWeights& w, const LogDensityMatrix& matrix) {
    if (matrix.rows() < 1) throw std::invalid_argument("log score needs at least one observation");
    return -row_log_mixture(w.values(), matrix).mean();
}

DiagnosticsReport diagnostics(const SimplexWeights& w, const LogDensityMatrix& train, const LogDensityMatrix& test) {
    check_models(w.size(), train.models(), "train matrix");
    check_models(w.size(), test.models(), "test matrix");

    auto jensen_gap = [&](const LogDensityMatrix& m) {
        if (m.rows() == 0) return 0.0;
        const Eigen::VectorXd mix = row_log_mixture(w.values(), m);
        const Eigen::VectorXd avg = m.values() * w.values();
        return (mix - avg).sum();
    };

    DiagnosticsReport report;
    report.jensen_gap_out = jensen_gap(test);
    report.jensen_gap_in = jensen_gap(train);
    report.overfit_ratios.resize(static_cast<Eigen::Index>(w.size()));
    for (Eigen::Index k = 0; k < report.overfit_ratios.size(); ++k) {
        const double train_dev = -train.values().col(k).sum();
        if (!(train_dev > 0.0)) {
            throw std::domain_error("overfit ratio undefined: in-sample deviance of model '" + train.labels()[k] +
                                    "' is not positive");
        }
        report.overfit_ratios(k) = -test.values().col(k).sum() / train_dev;
    }
    report.min_overfit_ratio = report.overfit_ratios.minCoeff();
    return report;
}

} // namespace divweight
