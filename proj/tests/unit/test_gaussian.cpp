#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "divweight/gaussian.hpp"

using namespace divweight;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double correlation(const RowMajorMatrix& X, Eigen::Index a, Eigen::Index b) {
    const Eigen::VectorXd x = X.col(a).array() - X.col(a).mean();
    const Eigen::VectorXd y = X.col(b).array() - X.col(b).mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

RegressionDataset linear_data(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    RegressionDataset d;
    d.X.resize(static_cast<Eigen::Index>(n), 4);
    d.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) d.X(i, j) = z(rng);
        d.y(i) = 1.5 - 0.7 * d.X(i, 0) + 0.2 * d.X(i, 2) + 0.9 * z(rng);
    }
    return d;
}

double log_likelihood(const RegressionDataset& d, const std::vector<std::size_t>& subset, double alpha,
                      const Eigen::VectorXd& beta, double sigma) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        double mu = alpha;
        for (std::size_t j = 0; j < subset.size(); ++j) mu += beta(static_cast<Eigen::Index>(j)) * d.X(i, static_cast<Eigen::Index>(subset[j]));
        const double r = (d.y(i) - mu) / sigma;
        ll += -kHalfLog2Pi - std::log(sigma) - 0.5 * r * r;
    }
    return ll;
}

} // namespace

TEST_CASE("sparse truth has exactly half of beta zeroed") {
    DgpConfig cfg;
    cfg.sparse = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto truth = generate_ground_truth(cfg, seed);
        CHECK((truth.beta.array() == 0.0).count() == 10);
    }
    cfg.p = 7;
    CHECK((generate_ground_truth(cfg, 1).beta.array() == 0.0).count() == 3);
}

TEST_CASE("ground truth is deterministic and has the configured spread") {
    const DgpConfig cfg;
    const auto a = generate_ground_truth(cfg, 42);
    const auto b = generate_ground_truth(cfg, 42);
    CHECK(a.beta == b.beta);
    CHECK(a.alpha == b.alpha);

    DgpConfig one;
    one.p = 1;
    double s = 0.0, s2 = 0.0, a_sum2 = 0.0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        const auto truth = generate_ground_truth(one, static_cast<std::uint64_t>(t));
        s += truth.beta(0);
        s2 += truth.beta(0) * truth.beta(0);
        a_sum2 += truth.alpha * truth.alpha;
    }
    const double mean = s / draws;
    const double sd = std::sqrt((s2 - draws * mean * mean) / (draws - 1));
    CHECK(std::abs(sd - 0.5) <= 0.02);
    CHECK(std::abs(std::sqrt(a_sum2 / draws) - 2.0) <= 0.08);

    DgpConfig bad;
    bad.noise_sd = 0.0;
    CHECK_THROWS_AS(generate_ground_truth(bad, 1), std::invalid_argument);
}

TEST_CASE("degenerate signal gives a near-zero response") {
    DgpConfig cfg;
    cfg.noise_sd = 1e-12;
    GroundTruth truth{Eigen::VectorXd::Zero(20), 0.0, cfg};
    const auto d = sample_dataset(truth, 50, 3);
    CHECK(d.y.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("design correlations") {
    DgpConfig cfg;
    cfg.p = 6;
    cfg.correlated = true;
    const auto corr = sample_dataset(generate_ground_truth(cfg, 1), 10000, 2);
    for (Eigen::Index a = 0; a < 6; ++a) {
        for (Eigen::Index b = a + 1; b < 6; ++b) CHECK(std::abs(correlation(corr.X, a, b) - 0.5) <= 0.05);
    }
    cfg.correlated = false;
    const auto indep = sample_dataset(generate_ground_truth(cfg, 1), 10000, 2);
    for (Eigen::Index a = 0; a < 6; ++a) {
        for (Eigen::Index b = a + 1; b < 6; ++b) CHECK(std::abs(correlation(indep.X, a, b)) <= 0.05);
        const double var = (indep.X.col(a).array() - indep.X.col(a).mean()).square().mean();
        CHECK(std::abs(var - 1.0) <= 0.05);
    }
}

TEST_CASE("student t errors are heavier tailed than gaussian errors") {
    DgpConfig cfg;
    cfg.p = 1;
    GroundTruth truth{Eigen::VectorXd::Zero(1), 0.0, cfg};
    const auto g = sample_dataset(truth, 20000, 5);
    truth.config.error_kind = ErrorKind::StudentT3;
    const auto t = sample_dataset(truth, 20000, 5);
    auto kurtosis = [](const Eigen::VectorXd& y) {
        const Eigen::ArrayXd c = y.array() - y.mean();
        const double v = c.square().mean();
        return c.pow(4).mean() / (v * v);
    };
    CHECK(std::abs(kurtosis(g.y) - 3.0) <= 0.2);
    CHECK(kurtosis(t.y) > 6.0);
    // Median absolute value of 5 * t_3 is 5 * 0.7649.
    std::vector<double> abs_t(t.y.data(), t.y.data() + t.y.size());
    for (double& v : abs_t) v = std::abs(v);
    std::nth_element(abs_t.begin(), abs_t.begin() + 10000, abs_t.end());
    CHECK(std::abs(abs_t[10000] - 5.0 * 0.7649) <= 0.15);
    CHECK(parse_error_kind("t3") == ErrorKind::StudentT3);
    CHECK(to_string(ErrorKind::StudentT3) == "student_t3");
}

TEST_CASE("model space") {
    const auto space = build_model_space(20, 10, 7);
    CHECK(space.size() == 10);
    for (const auto& s : space.subsets) {
        CHECK(s.size() >= 1);
        CHECK(s.size() <= 5);
        std::vector<std::size_t> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
        CHECK(sorted.back() < 20);
    }
    CHECK(build_model_space(20, 10, 7).subsets == space.subsets);

    std::array<int, 6> counts{};
    const auto big = build_model_space(20, 5000, 8);
    for (const auto& s : big.subsets) ++counts[s.size()];
    for (std::size_t m = 1; m <= 5; ++m) CHECK(std::abs(counts[m] / 5000.0 - 0.2) <= 0.03);

    CHECK_THROWS_AS(build_model_space(4, 10, 1), std::invalid_argument);
}

TEST_CASE("intercept-only and exact fits") {
    const auto d = linear_data(30, 1);
    const auto m = fit_mle(d, {});
    CHECK(m.alpha_hat == doctest::Approx(d.y.mean()).epsilon(1e-13));
    const double pop_sd = std::sqrt((d.y.array() - d.y.mean()).square().mean());
    CHECK(m.sigma_hat == doctest::Approx(pop_sd).epsilon(1e-12));

    RegressionDataset exact;
    exact.X.resize(5, 1);
    exact.y.resize(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        exact.X(i, 0) = static_cast<double>(i) - 1.5;
        exact.y(i) = 2.0 * exact.X(i, 0);
    }
    const auto e = fit_mle(exact, {0});
    CHECK(e.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(e.alpha_hat) <= 1e-12);
    CHECK(e.sigma_hat == GaussianLinearModel::kSigmaFloor);
}

TEST_CASE("fit agrees with the normal equations") {
    const auto d = linear_data(40, 2);
    const std::vector<std::size_t> subset{2, 0, 3};
    const auto m = fit_mle(d, subset);

    Eigen::MatrixXd A(40, 4);
    for (Eigen::Index i = 0; i < 40; ++i) {
        A(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < 3; ++j) A(i, j + 1) = d.X(i, static_cast<Eigen::Index>(subset[static_cast<std::size_t>(j)]));
    }
    const Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * d.y);
    CHECK(std::abs(m.alpha_hat - coef(0)) <= 1e-8);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(m.beta_hat(j) - coef(j + 1)) <= 1e-8);
    const double rss = (d.y - A * coef).squaredNorm();
    CHECK(m.sigma_hat * m.sigma_hat == doctest::Approx(rss / 40).epsilon(1e-12));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    const double best = log_likelihood(d, subset, m.alpha_hat, m.beta_hat, m.sigma_hat);
    for (int t = 0; t < 50; ++t) {
        Eigen::Vector4d dir;
        for (Eigen::Index j = 0; j < 4; ++j) dir(j) = z(rng);
        dir *= 1e-3 / dir.norm();
        const double moved = log_likelihood(d, subset, m.alpha_hat + dir(0), m.beta_hat + dir.tail(3), m.sigma_hat);
        CHECK(moved <= best + 1e-9);
    }
}

TEST_CASE("fit on a row subset and rank-deficient designs") {
    const auto d = linear_data(30, 4);
    const std::vector<std::size_t> rows{0, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    const auto m = fit_mle(d, {1}, rows);
    RegressionDataset sub;
    sub.X.resize(10, 4);
    sub.y.resize(10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        sub.X.row(i) = d.X.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
        sub.y(i) = d.y(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    }
    const auto direct = fit_mle(sub, {1});
    CHECK(m.alpha_hat == doctest::Approx(direct.alpha_hat).epsilon(1e-13));
    CHECK(m.beta_hat(0) == doctest::Approx(direct.beta_hat(0)).epsilon(1e-13));

    const std::vector<std::size_t> two{0, 1};
    const auto tiny = fit_mle(d, {0, 1, 2, 3}, std::span<const std::size_t>(two));
    CHECK(std::isfinite(tiny.alpha_hat));
    CHECK(tiny.beta_hat.allFinite());
    CHECK(tiny.sigma_hat == GaussianLinearModel::kSigmaFloor);

    CHECK_THROWS_AS(fit_mle(d, {4}), std::out_of_range);
    CHECK_THROWS_AS(fit_mle(d, {1, 1}), std::invalid_argument);
    RegressionDataset empty;
    empty.X.resize(0, 2);
    CHECK_THROWS_AS(fit_mle(empty, {0}), std::invalid_argument);
}

TEST_CASE("log density values") {
    GaussianLinearModel m;
    m.predictor_subset = {1};
    m.beta_hat = Eigen::VectorXd::Constant(1, 2.0);
    m.alpha_hat = 0.5;
    m.sigma_hat = 1.0;
    const std::array<double, 2> x{9.0, 1.5};
    CHECK(log_density(m, x, 3.5) == doctest::Approx(-0.9189385332).epsilon(1e-10));
    CHECK(log_density(m, x, 4.5) == doctest::Approx(-0.9189385332 - 0.5).epsilon(1e-10));

    const auto d = linear_data(20, 6);
    const auto fit = fit_mle(d, {0, 2});
    for (std::size_t i = 0; i < 20; ++i) {
        const double mu = fit.alpha_hat + fit.beta_hat(0) * d.X(static_cast<Eigen::Index>(i), 0) + fit.beta_hat(1) * d.X(static_cast<Eigen::Index>(i), 2);
        const double yi = d.y(static_cast<Eigen::Index>(i));
        const double want = -0.5 * std::log(2 * M_PI) - std::log(fit.sigma_hat) -
                            (yi - mu) * (yi - mu) / (2 * fit.sigma_hat * fit.sigma_hat);
        CHECK(std::abs(log_density(fit, d.row(i), yi) - want) <= 1e-12 * std::abs(want));
    }
}

TEST_CASE("densities integrate to one") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = linear_data(15, 10 + seed);
        const auto fit = fit_mle(d, {static_cast<std::size_t>(seed % 4)});
        const auto x = d.row(0);
        const double mu = fit.mean(x);
        const double lo = mu - 12 * fit.sigma_hat, hi = mu + 12 * fit.sigma_hat;
        const int intervals = 10000;
        const double h = (hi - lo) / intervals;
        double sum = 0.0;
        for (int j = 0; j <= intervals; ++j) {
            const double weight = (j == 0 || j == intervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            sum += weight * std::exp(log_density(fit, x, lo + j * h));
        }
        CHECK(std::abs(sum * h / 3.0 - 1.0) <= 1e-6);
    }
}

TEST_CASE("mixture rmse") {
    const auto d = linear_data(25, 7);
    std::vector<GaussianLinearModel> models{fit_mle(d, {0}), fit_mle(d, {0, 2}), fit_mle(d, {3})};

    GaussianLinearModel perfect;
    perfect.predictor_subset = {};
    perfect.beta_hat = Eigen::VectorXd(0);
    perfect.alpha_hat = 4.0;
    RegressionDataset flat = d;
    flat.y.setConstant(4.0);
    CHECK(mixture_rmse(SimplexWeights::vertex(1, 0), {perfect}, flat) == 0.0);

    for (std::size_t k = 0; k < 3; ++k) {
        double sse = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double r = d.y(static_cast<Eigen::Index>(i)) - models[k].mean(d.row(i));
            sse += r * r;
        }
        CHECK(mixture_rmse(SimplexWeights::vertex(3, k), models, d) == doctest::Approx(std::sqrt(sse / 25)).epsilon(1e-12));
    }

    const SimplexWeights w(Eigen::Vector3d(0.2, 0.5, 0.3));
    double sse = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double pred = 0.0;
        for (std::size_t k = 0; k < 3; ++k) pred += w[k] * models[k].mean(d.row(i));
        sse += (d.y(static_cast<Eigen::Index>(i)) - pred) * (d.y(static_cast<Eigen::Index>(i)) - pred);
    }
    CHECK(std::abs(mixture_rmse(w, models, d) - std::sqrt(sse / 25)) <= 1e-12 * std::sqrt(sse / 25));
    CHECK_THROWS_AS(mixture_rmse(SimplexWeights::uniform(2), models, d), DimensionError);
}

TEST_CASE("log density matrix and adapter agree with direct evaluation") {
    const auto d = linear_data(12, 8);
    std::vector<GaussianLinearModel> models{fit_mle(d, {0}), fit_mle(d, {1, 2})};
    const auto m = log_density_matrix(models, d);
    CHECK(m.rows() == 12);
    CHECK(m.models() == 2);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(m(i, 1) == log_density(models[1], d.row(i), d.y(static_cast<Eigen::Index>(i))));
    }
    const GaussianLinearAdapter adapter({1, 2});
    std::vector<std::size_t> all(12);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto fitted = adapter.fit(d, all);
    CHECK(fitted->log_density(d.row(3), d.y(3)) == doctest::Approx(m(3, 1)).epsilon(1e-14));
    CHECK(fitted->predictive_mean(d.row(3)) == doctest::Approx(models[1].mean(d.row(3))).epsilon(1e-14));
}
