#include "divweight/simplex_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <stdexcept>

namespace divweight {

namespace {

constexpr double kShrink = 0.5;
constexpr double kSufficientDecrease = 1e-4;
constexpr double kInitialStep = 1.0;
constexpr double kMinStep = 1e-300;
// Weight thresholds below which components with g_k > lambda are offered
// for removal, and where removed components are parked relative to the floor.
constexpr double kDropThresholds[] = {1e-3, 1e-6};
constexpr double kParkFraction = 0.1;
// Relative size of floating-point noise in an objective value.
constexpr double kNoise = 64 * std::numeric_limits<double>::epsilon();
// Smallest log-ratio kept between a component and the largest one, so that
// exp() never underflows to an exact zero.
constexpr double kLogRatioClamp = -700.0;

// Simplex point proportional to exp(a), with the log-ratio clamp.
Eigen::VectorXd normalize_log(Eigen::VectorXd a) {
    const double top = a.maxCoeff();
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        a(k) = std::exp(std::max(a(k) - top, kLogRatioClamp));
    }
    return a / a.sum();
}

Eigen::VectorXd mirror_step(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double eta) {
    return normalize_log(w.array().log() - eta * g.array());
}

Eigen::VectorXd interior_start(const SolverConfig& cfg, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(k);
    if (std::holds_alternative<UniformStart>(cfg.initial_point)) {
        return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(k));
    }
    if (std::holds_alternative<PriorStart>(cfg.initial_point)) {
        throw std::invalid_argument("prior start point must be resolved to explicit weights by the caller");
    }
    const auto& start = std::get<SimplexWeights>(cfg.initial_point);
    if (start.size() != k) {
        throw DimensionError("initial point has the wrong dimension");
    }
    // Boundary starts are nudged inward; multiplicative updates cannot leave zero.
    Eigen::VectorXd w = start.values().array().max(std::exp(kLogRatioClamp));
    return w / w.sum();
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw NonFiniteError(std::string("objective oracle returned a non-finite ") + what);
    }
}

} // namespace

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("solver max_iterations must be at least 1");
    if (!(floor > 0.0 && floor <= 1e-6)) throw std::invalid_argument("solver floor must lie in (0, 1e-6]");
}

double kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double floor) {
    const double lambda = w.dot(g);
    double res = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w(k) > floor) res = std::max(res, std::abs(g(k) - lambda));
    }
    return res;
}

SolverResult minimize_on_simplex(const SimplexObjective& objective, std::size_t k, const SolverConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("simplex dimension must be at least 1");
    const auto started = std::chrono::steady_clock::now();

    Eigen::VectorXd w = interior_start(cfg, k);
    double f = objective.value(w);
    require_finite(f, "value");

    SolverReport report;
    double eta = kInitialStep / 2.0;
    double scaled_residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd previous_w;
    double momentum_count = 0.0;

    auto gradient_at = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = objective.gradient(x);
        if (!g.allFinite()) throw NonFiniteError("objective oracle returned a non-finite gradient");
        return g;
    };

    for (;;) {
        const Eigen::VectorXd g = gradient_at(w);
        const double lambda = w.dot(g);
        const double scale = 1.0 + std::abs(f);
        scaled_residual = kkt_residual(w, g, cfg.floor) / scale;
        double dual_violation = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w(i) <= cfg.floor) dual_violation = std::max(dual_violation, lambda - g(i));
        }
        if (scaled_residual <= cfg.tolerance && dual_violation / scale <= cfg.tolerance) {
            report.converged = true;
            break;
        }
        if (report.iterations >= cfg.max_iterations) break;

        // A small component with g_k > lambda only decays geometrically under
        // multiplicative steps. Try parking such components just below the
        // floor, largest threshold first; a trial is kept only if the
        // objective does not increase.
        bool dropped_any = false;
        for (double threshold : kDropThresholds) {
            Eigen::VectorXd dropped = w;
            bool changed = false;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                if (w(i) > cfg.floor && w(i) <= threshold && g(i) > lambda) {
                    dropped(i) = kParkFraction * cfg.floor;
                    changed = true;
                }
            }
            if (!changed) continue;
            dropped /= dropped.sum();
            const double f_dropped = objective.value(dropped);
            if (std::isfinite(f_dropped) && f_dropped <= f) {
                w = std::move(dropped);
                f = f_dropped;
                dropped_any = true;
                break;
            }
        }
        if (dropped_any) {
            momentum_count = 0.0;
            ++report.iterations;
            continue;
        }

        // Extrapolated point in log-weight coordinates (restarted Nesterov
        // momentum). Without momentum the step starts from w itself.
        Eigen::VectorXd y = w;
        double f_y = f;
        Eigen::VectorXd g_y = g;
        if (momentum_count > 0.0) {
            const double beta = momentum_count / (momentum_count + 3.0);
            y = normalize_log(w.array().log() + beta * (w.array().log() - previous_w.array().log()));
            f_y = objective.value(y);
            if (std::isfinite(f_y)) {
                g_y = gradient_at(y);
            } else {
                y = w;
                f_y = f;
            }
        }

        auto search = [&](const Eigen::VectorXd& from, double f_from, const Eigen::VectorXd& g_from,
                          double& step) -> std::optional<std::pair<Eigen::VectorXd, double>> {
            // Directional derivatives use the centred gradient. The step sums
            // to zero, so the value is unchanged but the cancellation against a
            // large common gradient component disappears.
            const Eigen::VectorXd centred = g_from.array() - from.dot(g_from);
            for (; step >= kMinStep; step *= kShrink) {
                Eigen::VectorXd candidate = mirror_step(from, g_from, step);
                if (candidate == from) break;
                const double f_candidate = objective.value(candidate);
                if (!std::isfinite(f_candidate)) continue;
                const Eigen::VectorXd delta = candidate - from;
                if (f_candidate <= f_from + kSufficientDecrease * centred.dot(delta) && f_candidate <= f) {
                    return std::pair{std::move(candidate), f_candidate};
                }
                // Near the optimum the decrease drops below the rounding noise
                // of f. By convexity g(candidate).(candidate - from) <= 0
                // implies f(candidate) <= f(from).
                if (f_candidate - f <= kNoise * (1.0 + std::abs(f))) {
                    const Eigen::VectorXd g_candidate = gradient_at(candidate);
                    const double lambda_candidate = candidate.dot(g_candidate);
                    if ((g_candidate.array() - lambda_candidate).matrix().dot(delta) <= 0.0) {
                        return std::pair{std::move(candidate), f_candidate};
                    }
                }
            }
            return std::nullopt;
        };

        double step = eta * 2.0;
        auto next = search(y, f_y, g_y, step);
        if (!next && momentum_count > 0.0) {
            // The extrapolated point did not produce a descent step: restart.
            momentum_count = 0.0;
            step = eta * 2.0;
            next = search(w, f, g, step);
        }
        // No step decreases the objective any further in floating point.
        if (!next) break;

        previous_w = w;
        w = std::move(next->first);
        f = next->second;
        eta = step;
        momentum_count += 1.0;
        ++report.iterations;
    }

    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < cfg.floor) w(i) = 0.0;
    }
    w /= w.sum();

    report.objective = objective.value(w);
    require_finite(report.objective, "value");
    report.kkt_residual = scaled_residual;
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {SimplexWeights(std::move(w)), report};
}

} // namespace divweight
