#include "divweight/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "divweight/weighting.hpp"

namespace divweight {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Row maxima and exp(L_ik - max_i), so that a mixture row is
// max_i + log sum_k w_k E_ik.
struct ShiftedExp {
    Eigen::MatrixXd e;
    double shift_sum = 0.0;

    explicit ShiftedExp(const LogDensityMatrix& m) : e(m.values()) {
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            const double top = e.row(i).maxCoeff();
            shift_sum += top;
            for (Eigen::Index k = 0; k < e.cols(); ++k) e(i, k) = std::exp(e(i, k) - top);
        }
    }

    double log_mixture_sum(const Eigen::VectorXd& w) const {
        double s = shift_sum;
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < e.cols(); ++k) acc += w(k) * e(i, k);
            s += std::log(acc);
        }
        return s;
    }
};

template <typename Eval>
GridOracleResult grid_search(std::size_t k, double step, Eval eval) {
    if (k != 2 && k != 3) throw std::invalid_argument("grid oracle supports K = 2 or 3 only");
    const auto steps = static_cast<long>(std::llround(1.0 / step));
    GridOracleResult best{Eigen::VectorXd(static_cast<Eigen::Index>(k)), std::numeric_limits<double>::infinity()};
    Eigen::VectorXd w(static_cast<Eigen::Index>(k));
    auto consider = [&] {
        const double v = eval(w);
        if (v < best.value) {
            best.value = v;
            best.argmin = w;
        }
    };
    const double denom = static_cast<double>(steps);
    if (k == 2) {
        for (long a = 0; a <= steps; ++a) {
            w << a / denom, (steps - a) / denom;
            consider();
        }
    } else {
        for (long a = 0; a <= steps; ++a) {
            for (long b = 0; a + b <= steps; ++b) {
                w << a / denom, b / denom, (steps - a - b) / denom;
                consider();
            }
        }
    }
    return best;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

PenaltyConfig varied_penalty(std::mt19937_64& rng, PenaltyKind kind, std::size_t k) {
    PenaltyConfig cfg;
    cfg.kind = kind;
    cfg.scale_c = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: cfg.prior = OptimismPenalizingPrior{}; break;
    case 1: cfg.prior = UniformPrior{}; break;
    default: {
        Eigen::VectorXd p = random_simplex_point(rng, k).array() + 0.05;
        cfg.prior = SimplexWeights::normalized(p);
    }
    }
    return cfg;
}

SuiteResult grid_suite(std::mt19937_64& rng) {
    SuiteResult res{"grid-oracle", true, "", 0.0};
    double worst_dist = 0.0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    int cases = 0;
    const PenaltyConfig kl;
    auto check = [&](const Eigen::VectorXd& solver_w, double solver_value, const GridOracleResult& grid) {
        worst_dist = std::max(worst_dist, (solver_w - grid.argmin).cwiseAbs().maxCoeff());
        worst_excess = std::max(worst_excess, solver_value - grid.value);
        ++cases;
    };
    for (auto [count, n, k] : {std::tuple{10, 30, 2}, std::tuple{3, 20, 3}}) {
        for (int t = 0; t < count; ++t) {
            const RandomInstance inst = make_random_instance(rng, static_cast<std::size_t>(n), static_cast<std::size_t>(k));
            const auto dw = divergence_weights(inst.matrix, inst.optimism, kl);
            check(dw.weights.values(), dw.report.objective, grid_oracle_divergence(inst.matrix, inst.optimism, kl, 1e-3));
            const auto st = stacking_weights(inst.matrix);
            check(st.weights.values(), st.report.objective, grid_oracle_stacking(inst.matrix, 1e-3));
        }
    }
    res.passed = worst_dist <= 2e-3 && worst_excess <= 1e-6;
    res.detail = std::to_string(cases) + " cases, max L-inf distance " + fmt(worst_dist) +
                 ", max objective excess over grid " + fmt(worst_excess);
    return res;
}

SuiteResult boundary_suite(std::mt19937_64& rng) {
    SuiteResult res{"boundary-condition", true, "", 0.0};
    int matches = 0;
    const int total = 100;
    const PenaltyConfig kl;
    for (int t = 0; t < total; ++t) {
        std::uniform_int_distribution<std::size_t> n_dist(5, 30), k_dist(2, 6);
        RandomInstance inst = make_random_instance(rng, n_dist(rng), k_dist(rng));
        for (;;) {
            Eigen::VectorXd crit = selection_criteria(inst.matrix, inst.optimism);
            std::sort(crit.data(), crit.data() + crit.size());
            if ((crit.tail(crit.size() - 1) - crit.head(crit.size() - 1)).minCoeff() > 1e-6) break;
            inst = make_random_instance(rng, inst.matrix.rows(), inst.matrix.models());
        }
        const std::size_t k = inst.matrix.models();
        std::size_t vertex_best = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            const double v = divergence_objective(SimplexWeights::vertex(k, j), inst.matrix, inst.optimism, kl);
            if (v < best) {
                best = v;
                vertex_best = j;
            }
        }
        if (vertex_best == model_selection_index(inst.matrix, inst.optimism)) ++matches;
    }
    res.passed = matches == total;
    res.detail = std::to_string(matches) + "/" + std::to_string(total) + " vertex minimizers match selection";
    return res;
}

SuiteResult gradient_suite(std::mt19937_64& rng, const GradientFn& gradient) {
    SuiteResult res{"gradient", true, "", 0.0};
    double worst = 0.0;
    const double h = 1e-6;
    for (int t = 0; t < 10; ++t) {
        const std::size_t k = 2 + static_cast<std::size_t>(t % 4);
        const RandomInstance inst = make_random_instance(rng, 20, k);
        for (PenaltyKind kind : {PenaltyKind::KL, PenaltyKind::Brier}) {
            const PenaltyConfig cfg = varied_penalty(rng, kind, k);
            for (int p = 0; p < 20; ++p) {
                const Eigen::VectorXd w =
                    0.9 * random_simplex_point(rng, k).array() + 0.1 / static_cast<double>(k);
                const Eigen::VectorXd g = gradient(w, inst.matrix, inst.optimism, cfg);
                for (Eigen::Index j = 0; j < w.size(); ++j) {
                    Eigen::VectorXd up = w, down = w;
                    up(j) += h;
                    down(j) -= h;
                    const double fd = (divergence_objective(up, inst.matrix, inst.optimism, cfg) -
                                       divergence_objective(down, inst.matrix, inst.optimism, cfg)) /
                                      (2.0 * h);
                    worst = std::max(worst, std::abs(fd - g(j)) / std::max(1.0, std::abs(g(j))));
                }
            }
        }
    }
    res.passed = worst <= 1e-6;
    res.detail = "max relative error vs central differences " + fmt(worst);
    return res;
}

SuiteResult convexity_suite(std::mt19937_64& rng) {
    SuiteResult res{"convexity", true, "", 0.0};
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 2 + static_cast<std::size_t>(t % 5);
        const RandomInstance inst = make_random_instance(rng, 25, k);
        for (PenaltyKind kind : {PenaltyKind::KL, PenaltyKind::Brier}) {
            const PenaltyConfig cfg = varied_penalty(rng, kind, k);
            const Eigen::VectorXd u = random_simplex_point(rng, k);
            const Eigen::VectorXd v = random_simplex_point(rng, k);
            const Eigen::VectorXd mid = 0.5 * u + 0.5 * v;
            const double lhs = divergence_objective(mid, inst.matrix, inst.optimism, cfg);
            const double rhs = 0.5 * divergence_objective(u, inst.matrix, inst.optimism, cfg) +
                               0.5 * divergence_objective(v, inst.matrix, inst.optimism, cfg);
            worst = std::max(worst, lhs - rhs);
        }
    }
    res.passed = worst <= 1e-10;
    res.detail = "200 chords, max midpoint excess " + fmt(worst);
    return res;
}

template <typename Suite>
SuiteResult timed(Suite suite) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r;
    try {
        r = suite();
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace

RandomInstance make_random_instance(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.6, 1.8);
    std::uniform_real_distribution<double> op_dist(0.0, 3.0);
    Eigen::VectorXd mu(static_cast<Eigen::Index>(k)), sigma(static_cast<Eigen::Index>(k)), op(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        mu(j) = 0.5 * std_normal(rng);
        sigma(j) = scale(rng);
        op(j) = op_dist(rng);
    }
    Eigen::MatrixXd L(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double y = std_normal(rng);
        for (Eigen::Index j = 0; j < L.cols(); ++j) {
            const double z = (y - mu(j)) / sigma(j);
            L(i, j) = -kHalfLog2Pi - std::log(sigma(j)) - 0.5 * z * z;
        }
    }
    return {LogDensityMatrix(std::move(L)), OptimismVector(std::move(op))};
}

Eigen::VectorXd random_simplex_point(std::mt19937_64& rng, std::size_t k) {
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd w(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = expo(rng);
    return w / w.sum();
}

GridOracleResult grid_oracle_divergence(const LogDensityMatrix& matrix, const OptimismVector& op,
                                        const PenaltyConfig& cfg, double step) {
    const ShiftedExp fit(matrix);
    const std::size_t k = matrix.models();
    const Eigen::VectorXd& o = op.values();

    Eigen::VectorXd linear = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd target = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
    if (std::holds_alternative<OptimismPenalizingPrior>(cfg.prior)) {
        linear = o;
        target = (-(o.array() - o.minCoeff())).exp();
        target /= target.sum();
    } else if (const auto* p = std::get_if<SimplexWeights>(&cfg.prior)) {
        linear = -p->values().array().log();
        target = p->values();
    }

    return grid_search(k, step, [&](const Eigen::VectorXd& w) {
        double penalty = 0.0;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            if (cfg.kind == PenaltyKind::KL) {
                if (w(j) > 0.0) penalty += w(j) * std::log(w(j));
                penalty += w(j) * linear(j);
            } else {
                penalty += (w(j) - target(j)) * (w(j) - target(j));
            }
        }
        return cfg.scale_c * penalty - fit.log_mixture_sum(w);
    });
}

GridOracleResult grid_oracle_stacking(const LogDensityMatrix& heldout, double step) {
    const ShiftedExp fit(heldout);
    return grid_search(heldout.models(), step, [&](const Eigen::VectorXd& w) { return -fit.log_mixture_sum(w); });
}

std::vector<SuiteResult> run_selftest(const SelfTestOptions& options) {
    const GradientFn gradient =
        options.gradient ? options.gradient
                         : GradientFn([](const Eigen::VectorXd& w, const LogDensityMatrix& m, const OptimismVector& op,
                                         const PenaltyConfig& cfg) { return divergence_objective_gradient(w, m, op, cfg); });
    std::vector<SuiteResult> results;
    std::mt19937_64 rng(options.seed);
    results.push_back(timed([&] { return grid_suite(rng); }));
    results.push_back(timed([&] { return boundary_suite(rng); }));
    results.push_back(timed([&] { return gradient_suite(rng, gradient); }));
    results.push_back(timed([&] { return convexity_suite(rng); }));
    return results;
}

} // namespace divweight
