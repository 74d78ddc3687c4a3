#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "divweight/experiments.hpp"
#include "divweight/weighting.hpp"

using namespace divweight;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n_grid = {10};
    cfg.replications = 2;
    return cfg;
}

} // namespace

TEST_CASE("simulate emits one record per cell") {
    const auto cfg = small_config();
    const auto records = run_simulation(cfg);
    CHECK(records.size() == 6);
    std::ostringstream out;
    write_run_records(out, records);
    CHECK(count_lines(out.str()) == 7);
    CHECK(out.str().rfind("scenario,n,replication,method,rmse", 0) == 0);
    for (const auto& r : records) {
        CHECK(r.rmse > 0.0);
        CHECK(std::isfinite(r.mean_log_score));
        CHECK(r.weights.size() == 10);
        CHECK(std::abs(r.weights.sum() - 1.0) <= 1e-12);
    }
    std::set<std::tuple<std::size_t, Method>> cells;
    for (const auto& r : records) cells.emplace(r.replication, r.method);
    CHECK(cells.size() == 6);
}

TEST_CASE("simulate output does not depend on the thread count") {
    auto cfg = small_config();
    cfg.scenarios = {Scenario::NonsparseIndep, Scenario::SparseCorr};
    cfg.n_grid = {10, 30};
    cfg.replications = 3;
    std::ostringstream a, b, c;
    write_run_records(a, run_simulation(cfg));
    write_run_records(b, run_simulation(cfg));
    cfg.jobs = 8;
    write_run_records(c, run_simulation(cfg));
    CHECK(a.str() == b.str());
    CHECK(a.str() == c.str());
    cfg.base_seed = 2;
    std::ostringstream d;
    write_run_records(d, run_simulation(cfg));
    CHECK(a.str() != d.str());
}

TEST_CASE("replication pieces are consistent") {
    const auto truth = generate_ground_truth(dgp_for(Scenario::NonsparseCorr, ErrorKind::Gaussian), 3);
    const auto space = build_model_space(20, 10, 4);
    const auto rep = prepare_replication(truth, space, 30, 50, 5, {5, 6, 7});
    CHECK(rep.train.rows() == 30);
    CHECK(rep.heldout.rows() == 30);
    CHECK(rep.test.size() == 50);
    CHECK(rep.test_log_density.rows() == 50);
    CHECK(rep.optimism.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        double in = 0.0, out = 0.0;
        for (std::size_t i = 0; i < 30; ++i) {
            in += rep.train(i, k);
            out += rep.heldout(i, k);
        }
        CHECK(std::abs((in - out) - rep.optimism[k]) <= 1e-9 * std::max(1.0, std::abs(in)));
    }

    const auto dw = compute_method_weights(Method::DW, rep, {}, {});
    CHECK(dw.weights.values() == divergence_weights(rep.train, rep.optimism, {}).weights.values());
    const auto stack = compute_method_weights(Method::Stack, rep, {}, {});
    CHECK(stack.weights.values() == stacking_weights(rep.heldout).weights.values());
    const auto nw = compute_method_weights(Method::New, rep, {}, {});
    CHECK((nw.weights.values() - negative_exponentiated_weights(selection_criteria(rep.train, rep.optimism)).values()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("stability edge cases") {
    auto cfg = small_config();
    cfg.replications = 1;
    for (const auto& row : run_stability(cfg)) CHECK(row.mean_weight_sd == 0.0);

    cfg.replications = 4;
    cfg.models = 1;
    for (const auto& row : run_stability(cfg)) CHECK(row.mean_weight_sd == 0.0);

    cfg.models = 10;
    const auto rows = run_stability(cfg);
    CHECK(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(row.replications == 4);
        CHECK(row.mean_weight_sd > 0.0);
    }
    std::ostringstream out;
    write_stability(out, rows);
    CHECK(count_lines(out.str()) == 4);
}

TEST_CASE("robustness default variant matches simulate") {
    RobustnessConfig rc;
    rc.base = small_config();
    rc.base.n_grid = {10, 40};
    rc.c_values = {0.5, 1.0};
    rc.error_kinds = {ErrorKind::Gaussian};
    const auto records = run_robustness(rc);
    // per (n, rep): 2 c x 2 penalties x 2 priors dw rows + stack + new
    CHECK(records.size() == 2 * 2 * (8 + 2));

    const auto sim = run_simulation(rc.base);
    std::size_t matched = 0;
    for (const auto& s : sim) {
        for (const auto& r : records) {
            if (r.run.n != s.n || r.run.replication != s.replication || r.run.method != s.method) continue;
            if (s.method == Method::DW &&
                !(r.penalty == PenaltyKind::KL && r.c == 1.0 && r.prior == PriorKind::Optimism)) {
                continue;
            }
            CHECK(r.run.rmse == s.rmse);
            CHECK(r.run.weights == s.weights);
            ++matched;
        }
    }
    CHECK(matched == sim.size());

    std::ostringstream out;
    write_robustness(out, records);
    CHECK(count_lines(out.str()) == records.size() + 1);
}

TEST_CASE("convergence rows and entropy bound") {
    ConvergenceConfig cfg;
    cfg.n_grid = {20, 60};
    cfg.replications = 5;
    cfg.holdout = 500;
    const auto rows = run_convergence(cfg);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.replications == 5);
        CHECK(row.median_gap >= 0.0);
        CHECK(row.max_entropy_term >= 0.0);
        CHECK(row.max_entropy_term <= std::log(10.0) / static_cast<double>(row.n) + 1e-12);
        CHECK(row.median_entropy_term <= row.max_entropy_term);
    }
    std::ostringstream out;
    write_convergence(out, rows);
    CHECK(count_lines(out.str()) == 3);
}

TEST_CASE("config validation and names") {
    auto cfg = small_config();
    cfg.replications = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.n_grid = {9};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    for (Scenario s : {Scenario::NonsparseIndep, Scenario::NonsparseCorr, Scenario::SparseIndep, Scenario::SparseCorr}) {
        CHECK(parse_scenario(to_string(s)) == s);
    }
    for (Method m : {Method::DW, Method::Stack, Method::New}) CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_scenario("dense"), std::invalid_argument);
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}
