#include "divweight/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "divweight/csv_io.hpp"
#include "divweight/optimism.hpp"
#include "divweight/weighting.hpp"

namespace divweight {

namespace {

enum Stream : std::uint64_t { kTruth = 1, kSpace = 2, kTrain = 3, kTest = 4, kFolds = 5, kHoldout = 6 };

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception (by index) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, std::size_t jobs, Body body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t scenario_index(Scenario s) { return static_cast<std::size_t>(s); }

std::string join_weights(const Eigen::VectorXd& w) {
    std::string out;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (k) out += ';';
        out += format_double(w(k));
    }
    return out;
}

void write_run_fields(std::ostream& out, const RunRecord& r) {
    out << to_string(r.scenario) << ',' << r.n << ',' << r.replication << ',' << to_string(r.method) << ','
        << format_double(r.rmse) << ',' << format_double(r.mean_log_score) << ',' << join_weights(r.weights) << ','
        << r.seed << ',' << (r.solver_converged ? "true" : "false");
}

RunRecord evaluate(Method method, const Replication& rep, const MethodWeights& mw) {
    RunRecord r;
    r.method = method;
    r.rmse = mixture_rmse(mw.weights, rep.models, rep.test);
    r.mean_log_score = mixture_log_score(mw.weights, rep.test_log_density);
    r.weights = mw.weights.values();
    r.solver_converged = mw.converged;
    return r;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Seeds for one (scenario, replication) cell; the truth and model space do
// not depend on n so that the n grid is paired within a replication.
struct CellSeeds {
    std::uint64_t truth;
    std::uint64_t space;
};

CellSeeds cell_seeds(std::uint64_t rep_seed, Scenario s) {
    return {derive_seed(rep_seed, {scenario_index(s), kTruth}), derive_seed(rep_seed, {scenario_index(s), kSpace})};
}

ReplicationSeeds data_seeds(std::uint64_t rep_seed, Scenario s, std::size_t n) {
    return {derive_seed(rep_seed, {scenario_index(s), n, kTrain}), derive_seed(rep_seed, {scenario_index(s), n, kTest}),
            derive_seed(rep_seed, {scenario_index(s), n, kFolds})};
}

void validate_common(const std::vector<std::size_t>& n_grid, std::size_t replications, std::size_t folds) {
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    if (n_grid.empty()) throw std::invalid_argument("n grid is empty");
    for (std::size_t n : n_grid) {
        if (n < 10) throw std::invalid_argument("sample sizes in the n grid must be at least 10");
        if (n < folds) throw std::invalid_argument("sample size smaller than the fold count");
    }
}

} // namespace

std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::NonsparseIndep: return "nonsparse_indep";
    case Scenario::NonsparseCorr: return "nonsparse_corr";
    case Scenario::SparseIndep: return "sparse_indep";
    case Scenario::SparseCorr: return "sparse_corr";
    }
    return "unknown";
}

std::string to_string(Method m) {
    switch (m) {
    case Method::DW: return "dw";
    case Method::Stack: return "stack";
    case Method::New: return "new";
    }
    return "unknown";
}

std::string to_string(PriorKind p) { return p == PriorKind::Optimism ? "optimism" : "uniform"; }

Scenario parse_scenario(const std::string& text) {
    for (Scenario s : {Scenario::NonsparseIndep, Scenario::NonsparseCorr, Scenario::SparseIndep, Scenario::SparseCorr}) {
        if (text == to_string(s)) return s;
    }
    throw std::invalid_argument("unknown scenario '" + text + "'");
}

Method parse_method(const std::string& text) {
    for (Method m : {Method::DW, Method::Stack, Method::New}) {
        if (text == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown method '" + text + "' (expected dw, stack or new)");
}

PriorKind parse_prior_kind(const std::string& text) {
    if (text == "optimism") return PriorKind::Optimism;
    if (text == "uniform" || text == "flat") return PriorKind::Uniform;
    throw std::invalid_argument("unknown prior '" + text + "' (expected optimism or uniform)");
}

DgpConfig dgp_for(Scenario s, ErrorKind errors, std::size_t predictors) {
    DgpConfig cfg;
    cfg.p = predictors;
    cfg.sparse = s == Scenario::SparseIndep || s == Scenario::SparseCorr;
    cfg.correlated = s == Scenario::NonsparseCorr || s == Scenario::SparseCorr;
    cfg.error_kind = errors;
    return cfg;
}

PenaltyConfig penalty_for(PenaltyKind kind, double c, PriorKind prior) {
    PenaltyConfig cfg;
    cfg.kind = kind;
    cfg.scale_c = c;
    if (prior == PriorKind::Uniform) cfg.prior = UniformPrior{};
    cfg.validate();
    return cfg;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)};
    for (std::uint64_t s : stream) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

void ExperimentConfig::validate() const {
    validate_common(n_grid, replications, folds);
    if (scenarios.empty()) throw std::invalid_argument("no scenarios selected");
    if (methods.empty()) throw std::invalid_argument("no methods selected");
    if (test_size < 1) throw std::invalid_argument("test size must be at least 1");
    if (models < 1) throw std::invalid_argument("need at least one model");
    penalty.validate();
    solver.validate();
}

Replication prepare_replication(const GroundTruth& truth, const ModelSpace& space, std::size_t n,
                                std::size_t test_size, std::size_t folds, const ReplicationSeeds& seeds) {
    const RegressionDataset train = sample_dataset(truth, n, seeds.train);
    RegressionDataset test = sample_dataset(truth, test_size, seeds.test);
    const FoldPlan plan = make_folds(n, folds, seeds.folds);

    const auto k = static_cast<Eigen::Index>(space.size());
    Eigen::MatrixXd train_ld(static_cast<Eigen::Index>(n), k);
    Eigen::MatrixXd heldout_ld(static_cast<Eigen::Index>(n), k);
    Eigen::VectorXd op(k);
    std::vector<GaussianLinearModel> models;
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& subset = space.subsets[static_cast<std::size_t>(j)];
        const CvOptimism cv = cv_optimism(GaussianLinearAdapter(subset), train, plan);
        train_ld.col(j) = cv.full_fit_log_density;
        heldout_ld.col(j) = cv.heldout_log_density;
        op(j) = cv.optimism;
        models.push_back(fit_mle(train, subset));
    }
    LogDensityMatrix test_ld = log_density_matrix(models, test);
    return Replication{std::move(models),         LogDensityMatrix(std::move(train_ld)),
                       LogDensityMatrix(std::move(heldout_ld)), OptimismVector(std::move(op)),
                       std::move(test),           std::move(test_ld)};
}

MethodWeights compute_method_weights(Method method, const Replication& rep, const PenaltyConfig& penalty,
                                     const SolverConfig& solver) {
    switch (method) {
    case Method::DW: {
        auto result = divergence_weights(rep.train, rep.optimism, penalty, solver);
        return {std::move(result.weights), result.report.converged};
    }
    case Method::Stack: {
        auto result = stacking_weights(rep.heldout, solver);
        return {std::move(result.weights), result.report.converged};
    }
    case Method::New:
        return {negative_exponentiated_weights(selection_criteria(rep.train, rep.optimism)), true};
    }
    throw std::logic_error("unhandled method");
}

std::vector<RunRecord> run_simulation(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Cell {
        Scenario scenario;
        std::size_t n;
        std::size_t replication;
    };
    std::vector<Cell> cells;
    for (Scenario s : cfg.scenarios) {
        for (std::size_t n : cfg.n_grid) {
            for (std::size_t r = 0; r < cfg.replications; ++r) cells.push_back({s, n, r});
        }
    }

    std::vector<std::vector<RunRecord>> per_cell(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t idx) {
        const Cell& cell = cells[idx];
        const std::uint64_t rep_seed = cfg.base_seed + cell.replication;
        const CellSeeds cs = cell_seeds(rep_seed, cell.scenario);
        const GroundTruth truth = generate_ground_truth(dgp_for(cell.scenario, cfg.error_kind, cfg.predictors), cs.truth);
        const ModelSpace space = build_model_space(cfg.predictors, cfg.models, cs.space);
        const Replication rep = prepare_replication(truth, space, cell.n, cfg.test_size, cfg.folds,
                                                    data_seeds(rep_seed, cell.scenario, cell.n));
        for (Method m : cfg.methods) {
            RunRecord r = evaluate(m, rep, compute_method_weights(m, rep, cfg.penalty, cfg.solver));
            r.scenario = cell.scenario;
            r.n = cell.n;
            r.replication = cell.replication;
            r.seed = rep_seed;
            per_cell[idx].push_back(std::move(r));
        }
    });

    std::vector<RunRecord> records;
    for (auto& v : per_cell) {
        for (auto& r : v) records.push_back(std::move(r));
    }
    std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tuple(a.scenario, a.n, a.replication, a.method) < std::tuple(b.scenario, b.n, b.replication, b.method);
    });
    return records;
}

void write_run_records(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "scenario,n,replication,method,rmse,mean_log_score,weights,seed,solver_converged\n";
    for (const auto& r : records) {
        write_run_fields(out, r);
        out << '\n';
    }
}

std::vector<StabilityRow> run_stability(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<StabilityRow> rows;
    for (Scenario s : cfg.scenarios) {
        const CellSeeds cs = cell_seeds(cfg.base_seed, s);
        const GroundTruth truth = generate_ground_truth(dgp_for(s, cfg.error_kind, cfg.predictors), cs.truth);
        const ModelSpace space = build_model_space(cfg.predictors, cfg.models, cs.space);

        for (std::size_t n : cfg.n_grid) {
            // weights[r][method index]
            std::vector<std::vector<Eigen::VectorXd>> weights(cfg.replications);
            parallel_for(cfg.replications, cfg.jobs, [&](std::size_t r) {
                const std::uint64_t rep_seed = cfg.base_seed + r;
                const Replication rep =
                    prepare_replication(truth, space, n, cfg.test_size, cfg.folds, data_seeds(rep_seed, s, n));
                for (Method m : cfg.methods) {
                    weights[r].push_back(compute_method_weights(m, rep, cfg.penalty, cfg.solver).weights.values());
                }
            });

            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const auto k = static_cast<Eigen::Index>(cfg.models);
                double sd_sum = 0.0;
                if (cfg.replications > 1) {
                    for (Eigen::Index c = 0; c < k; ++c) {
                        double mean = 0.0;
                        for (const auto& w : weights) mean += w[mi](c);
                        mean /= static_cast<double>(cfg.replications);
                        double ss = 0.0;
                        for (const auto& w : weights) ss += (w[mi](c) - mean) * (w[mi](c) - mean);
                        sd_sum += std::sqrt(ss / static_cast<double>(cfg.replications - 1));
                    }
                }
                rows.push_back({s, cfg.methods[mi], n, cfg.replications, sd_sum / static_cast<double>(k)});
            }
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const StabilityRow& a, const StabilityRow& b) {
        return std::tuple(a.scenario, a.method, a.n) < std::tuple(b.scenario, b.method, b.n);
    });
    return rows;
}

void write_stability(std::ostream& out, const std::vector<StabilityRow>& rows) {
    out << "scenario,method,n,replications,mean_weight_sd\n";
    for (const auto& r : rows) {
        out << to_string(r.scenario) << ',' << to_string(r.method) << ',' << r.n << ',' << r.replications << ','
            << format_double(r.mean_weight_sd) << '\n';
    }
}

void RobustnessConfig::validate() const {
    base.validate();
    if (c_values.empty() || penalties.empty() || priors.empty() || error_kinds.empty()) {
        throw std::invalid_argument("robustness grid has an empty axis");
    }
    for (double c : c_values) {
        if (!(c > 0.0)) throw std::invalid_argument("penalty scale c must be positive");
    }
}

std::vector<RobustnessRecord> run_robustness(const RobustnessConfig& cfg) {
    cfg.validate();
    const auto& base = cfg.base;
    struct Cell {
        ErrorKind errors;
        Scenario scenario;
        std::size_t n;
        std::size_t replication;
    };
    std::vector<Cell> cells;
    for (ErrorKind e : cfg.error_kinds) {
        for (Scenario s : base.scenarios) {
            for (std::size_t n : base.n_grid) {
                for (std::size_t r = 0; r < base.replications; ++r) cells.push_back({e, s, n, r});
            }
        }
    }

    std::vector<std::vector<RobustnessRecord>> per_cell(cells.size());
    parallel_for(cells.size(), base.jobs, [&](std::size_t idx) {
        const Cell& cell = cells[idx];
        const std::uint64_t rep_seed = base.base_seed + cell.replication;
        const CellSeeds cs = cell_seeds(rep_seed, cell.scenario);
        const GroundTruth truth = generate_ground_truth(dgp_for(cell.scenario, cell.errors, base.predictors), cs.truth);
        const ModelSpace space = build_model_space(base.predictors, base.models, cs.space);
        const Replication rep = prepare_replication(truth, space, cell.n, base.test_size, base.folds,
                                                    data_seeds(rep_seed, cell.scenario, cell.n));

        auto emit = [&](Method m, const PenaltyConfig& penalty, std::optional<PenaltyKind> kind,
                        std::optional<double> c, std::optional<PriorKind> prior) {
            RobustnessRecord rec;
            rec.run = evaluate(m, rep, compute_method_weights(m, rep, penalty, base.solver));
            rec.run.scenario = cell.scenario;
            rec.run.n = cell.n;
            rec.run.replication = cell.replication;
            rec.run.seed = rep_seed;
            rec.error_kind = cell.errors;
            rec.penalty = kind;
            rec.c = c;
            rec.prior = prior;
            per_cell[idx].push_back(std::move(rec));
        };

        for (Method m : base.methods) {
            if (m != Method::DW) {
                emit(m, base.penalty, std::nullopt, std::nullopt, std::nullopt);
                continue;
            }
            for (PenaltyKind kind : cfg.penalties) {
                for (PriorKind prior : cfg.priors) {
                    for (double c : cfg.c_values) emit(m, penalty_for(kind, c, prior), kind, c, prior);
                }
            }
        }
    });

    std::vector<RobustnessRecord> records;
    for (auto& v : per_cell) {
        for (auto& r : v) records.push_back(std::move(r));
    }
    std::stable_sort(records.begin(), records.end(), [](const RobustnessRecord& a, const RobustnessRecord& b) {
        return std::tuple(a.error_kind, a.run.scenario, a.run.n, a.run.replication, a.run.method) <
               std::tuple(b.error_kind, b.run.scenario, b.run.n, b.run.replication, b.run.method);
    });
    return records;
}

void write_robustness(std::ostream& out, const std::vector<RobustnessRecord>& records) {
    out << "scenario,n,replication,method,rmse,mean_log_score,weights,seed,solver_converged,"
           "penalty_kind,c,prior_kind,error_kind\n";
    for (const auto& r : records) {
        write_run_fields(out, r.run);
        out << ',' << (r.penalty ? to_string(*r.penalty) : "none") << ',' << (r.c ? format_double(*r.c) : "")
            << ',' << (r.prior ? to_string(*r.prior) : "none") << ',' << to_string(r.error_kind) << '\n';
    }
}

void ConvergenceConfig::validate() const {
    validate_common(n_grid, replications, folds);
    if (holdout < 1) throw std::invalid_argument("holdout size must be at least 1");
    if (models < 1) throw std::invalid_argument("need at least one model");
    solver.validate();
}

std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& cfg) {
    cfg.validate();
    const CellSeeds cs = cell_seeds(cfg.base_seed, cfg.scenario);
    const GroundTruth truth = generate_ground_truth(dgp_for(cfg.scenario, ErrorKind::Gaussian, cfg.predictors), cs.truth);
    const ModelSpace space = build_model_space(cfg.predictors, cfg.models, cs.space);
    const PenaltyConfig penalty;

    std::vector<ConvergenceRow> rows;
    for (std::size_t n : cfg.n_grid) {
        std::vector<double> gap(cfg.replications), entropy(cfg.replications), optimism(cfg.replications);
        parallel_for(cfg.replications, cfg.jobs, [&](std::size_t r) {
            const std::uint64_t rep_seed = cfg.base_seed + r;
            ReplicationSeeds seeds = data_seeds(rep_seed, cfg.scenario, n);
            seeds.test = derive_seed(rep_seed, {static_cast<std::uint64_t>(cfg.scenario), n, kHoldout});
            const Replication rep = prepare_replication(truth, space, n, cfg.holdout, cfg.folds, seeds);
            const auto result = divergence_weights(rep.train, rep.optimism, penalty, cfg.solver);
            const Eigen::VectorXd& w = result.weights.values();
            const double nn = static_cast<double>(n);
            const double expected_loss = mixture_log_score(result.weights, rep.test_log_density);
            gap[r] = std::abs(result.report.objective - nn * expected_loss) / nn;
            double ent = 0.0;
            for (Eigen::Index k = 0; k < w.size(); ++k) {
                if (w(k) > 0.0) ent += w(k) * std::log(w(k));
            }
            entropy[r] = std::abs(ent) / nn;
            optimism[r] = std::abs(w.dot(rep.optimism.values())) / nn;
        });

        ConvergenceRow row;
        row.n = n;
        row.replications = cfg.replications;
        row.median_gap = median(gap);
        for (double g : gap) row.mean_gap += g / static_cast<double>(gap.size());
        row.median_entropy_term = median(entropy);
        row.max_entropy_term = *std::max_element(entropy.begin(), entropy.end());
        row.median_optimism_term = median(optimism);
        rows.push_back(row);
    }
    return rows;
}

void write_convergence(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
    out << "n,replications,median_gap,mean_gap,median_entropy_term,max_entropy_term,median_optimism_term\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.replications << ',' << format_double(r.median_gap) << ',' << format_double(r.mean_gap)
            << ',' << format_double(r.median_entropy_term) << ',' << format_double(r.max_entropy_term) << ','
            << format_double(r.median_optimism_term) << '\n';
    }
}

} // namespace divweight
