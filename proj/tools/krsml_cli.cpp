// krsml: train, apply and compare kernel regressors with learned metrics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "krsml/bench.hpp"
#include "krsml/data_io.hpp"
#include "krsml/errors.hpp"
#include "krsml/evaluation.hpp"
#include "krsml/model_io.hpp"

namespace {

using namespace krsml;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Settings {
    std::string target = "-1";
    int k = 30;
    double sigma = KernelConfig{}.sigma;
    double alpha = TrainConfig{}.alpha;
    double mu = TrainConfig{}.mu;
    double theta = TrainConfig{}.theta;
    int max_iters = TrainConfig{}.max_iters;
    double variance_threshold = 0.95;
    bool no_standardize = false;
    std::uint64_t seed = 0;
    std::string model;
    std::string out;

    // verb-specific
    std::string learner = "KR_SML";
    std::string data;
    std::vector<std::string> train_files;
    std::vector<std::string> test_files;
    std::string series;
    long lag = SeriesSpec{}.lag_window;
    long horizon = 1;
    long train_count = 0;
    std::optional<double> mlkr_alpha;
    std::vector<double> alphas{1e-4, 1e-3, 1e-2};
    std::vector<double> mus{0.0, 0.1, 1.0};
    int folds = 10;
    bool tune = false;
    std::string dump;
    std::string train_out;
    std::string test_out;
};

ColumnRef column_ref(const std::string& text) {
    try {
        std::size_t used = 0;
        const long idx = std::stol(text, &used);
        if (used == text.size()) return idx;
    } catch (const std::exception&) {
    }
    return text;
}

FitOptions fit_options(const Settings& s) {
    FitOptions o;
    o.train.alpha = s.alpha;
    o.train.mu = s.mu;
    o.train.theta = s.theta;
    o.train.max_iters = s.max_iters;
    o.train.seed = s.seed;
    o.train.kernel.k_neighbors = s.k;
    o.train.kernel.sigma = s.sigma;
    o.variance_threshold = s.variance_threshold;
    o.standardize = !s.no_standardize;
    return o;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

void add_kernel_flags(CLI::App* app, Settings& s) {
    app->add_option("--k", s.k, "Neighbours used by the kernel estimate")->check(CLI::PositiveNumber);
    app->add_option("--sigma", s.sigma, "Gaussian kernel width")->check(CLI::PositiveNumber);
}

void add_train_flags(CLI::App* app, Settings& s) {
    add_kernel_flags(app, s);
    app->add_option("--alpha", s.alpha, "Initial step size");
    app->add_option("--mu", s.mu, "Trace regularization weight");
    app->add_option("--theta", s.theta, "Stop when the objective changes by at most this");
    app->add_option("--max-iters", s.max_iters, "Gradient iterations");
    app->add_option("--variance-threshold", s.variance_threshold, "Variance kept by KR_PCA");
    app->add_flag("--no-standardize", s.no_standardize, "Use raw features");
    app->add_option("--seed", s.seed, "Seed for fold assignment");
}

void add_grid_flags(CLI::App* app, Settings& s) {
    app->add_option("--alphas", s.alphas, "Step sizes to search")->delimiter(',');
    app->add_option("--mus", s.mus, "Regularization weights to search")->delimiter(',');
    app->add_option("--folds", s.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
}

std::string grid_table(const GridSearchResult& g) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%12s %12s %14s\n", "alpha", "mu", "CV RMSE");
    out << buf;
    for (std::size_t i = 0; i < g.table.size(); ++i) {
        const GridCell& c = g.table[i];
        if (c.failed) std::snprintf(buf, sizeof buf, "%12.4g %12.4g %14s  %s\n", c.alpha, c.mu, "failed", c.error.c_str());
        else std::snprintf(buf, sizeof buf, "%12.4g %12.4g %14.6g%s\n", c.alpha, c.mu, c.mean_rmse, i == g.best_index ? "  *" : "");
        out << buf;
    }
    return out.str();
}

nlohmann::json grid_json(const GridSearchResult& g) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["best"] = {{"alpha", g.best.alpha}, {"mu", g.best.mu}};
    j["cells"] = nlohmann::json::array();
    for (const GridCell& c : g.table) {
        nlohmann::json cell{{"alpha", c.alpha}, {"mu", c.mu}, {"failed", c.failed}};
        if (c.failed) {
            cell["error"] = c.error;
        } else {
            cell["mean_rmse"] = c.mean_rmse;
            cell["fold_rmse"] = c.fold_rmse;
        }
        j["cells"].push_back(cell);
    }
    return j;
}

/// Runs the grid on `train` and returns `base` with the winning alpha and mu.
FitOptions tuned(const Dataset& train, const Settings& s, Learner learner, FitOptions base) {
    const GridSearchResult g = grid_search(train, s.alphas, s.mus, s.folds, s.seed, base, learner);
    std::cerr << "tuning " << learner_name(learner) << ":\n" << grid_table(g);
    base.train = g.best;
    return base;
}

int run_train(const Settings& s) {
    const Learner learner = parse_learner(s.learner);
    const Dataset train = load_csv(s.data, column_ref(s.target));
    FitOptions opt = fit_options(s);
    if (s.tune && (learner == Learner::KR_SML || learner == Learner::MLKR)) opt = tuned(train, s, learner, opt);
    const FitResult fitted = fit(learner, train, opt);
    save_model(fitted.model, s.model);

    std::cout << "learner " << learner_name(learner) << ", n=" << train.n() << ", d=" << train.d()
              << ", rank(M)=" << numerical_rank(fitted.model.metric()) << " of " << fitted.model.metric().dim() << '\n';
    if (fitted.trace) {
        const TraceRecord& best = fitted.trace->best();
        std::cout << "iterations " << fitted.trace->iterations() << ", accepted " << fitted.trace->accepted_steps()
                  << ", best objective " << best.objective << " (loss " << best.loss << ")\n";
        if (!s.out.empty()) {
            std::ostringstream csv;
            csv << "iteration,objective,loss,trace,rank,min_eigenvalue,step,accepted\n";
            char buf[256];
            for (const TraceRecord& r : fitted.trace->records) {
                std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%d\n", r.iteration, r.objective,
                              r.loss, r.trace, r.rank, r.min_eigenvalue, r.step, r.accepted ? 1 : 0);
                csv << buf;
            }
            write_text(s.out, csv.str());
        }
    }
    std::cout << "model written to " << s.model << '\n';
    return 0;
}

int run_predict(const Settings& s) {
    const Model model = load_model(s.model);
    std::vector<std::string> names;
    Eigen::MatrixXd x = load_features(s.data, &names);
    if (x.cols() == model.input_dim() + 1) {
        // The file still carries its target column; drop it.
        const ColumnRef ref = column_ref(s.target);
        x = load_csv(s.data, ref).features;
    }
    if (x.cols() != model.input_dim()) {
        throw DataError("'" + s.data + "' has " + std::to_string(x.cols()) + " feature columns, model expects " +
                        std::to_string(model.input_dim()));
    }
    const Eigen::VectorXd yhat = model.predict(x);
    std::ostringstream csv;
    csv << "index,yhat\n";
    char buf[64];
    for (Index i = 0; i < yhat.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g\n", static_cast<long>(i), yhat(i));
        csv << buf;
    }
    write_text(s.out, csv.str());
    return 0;
}

int run_eval(const Settings& s) {
    const Model model = load_model(s.model);
    const Dataset test = load_csv(s.data, column_ref(s.target));
    const EvalReport report = evaluate(model, test);
    std::cout << eval_report_table(report);
    if (!s.out.empty()) write_text(s.out, eval_report_json(report));
    if (!s.dump.empty()) write_text(s.dump, predictions_csv(report));
    return 0;
}

std::vector<TrainTestSplit> bench_splits(const Settings& s) {
    std::vector<TrainTestSplit> splits;
    if (!s.series.empty()) {
        if (!s.train_files.empty() || !s.test_files.empty())
            throw InvalidArgument("--series cannot be combined with --train/--test");
        const SeriesSpec spec{s.lag, s.horizon, s.train_count};
        splits.push_back(window_split(load_series(s.series), spec));
        return splits;
    }
    if (s.train_files.empty() || s.train_files.size() != s.test_files.size())
        throw InvalidArgument("give matching --train and --test files, or --series");
    for (std::size_t i = 0; i < s.train_files.size(); ++i) {
        const ColumnRef ref = column_ref(s.target);
        splits.push_back({load_csv(s.train_files[i], ref), load_csv(s.test_files[i], ref)});
    }
    return splits;
}

int run_bench(const Settings& s) {
    const std::vector<TrainTestSplit> splits = bench_splits(s);
    BenchConfig cfg;
    cfg.sml = fit_options(s);
    cfg.mlkr = cfg.sml;
    cfg.mlkr.train.mu = 0.0;
    if (s.mlkr_alpha) cfg.mlkr.train.alpha = *s.mlkr_alpha;
    if (s.tune) {
        // Tuned on the first split's training set only; the test sets stay unseen.
        cfg.sml = tuned(splits.front().train, s, Learner::KR_SML, cfg.sml);
        Settings mlkr_grid = s;
        mlkr_grid.mus = {0.0};
        cfg.mlkr = tuned(splits.front().train, mlkr_grid, Learner::MLKR, cfg.mlkr);
    }
    const BenchReport report = bench_command(splits, cfg);
    std::cout << bench_report_table(report);
    if (!s.out.empty()) write_text(s.out, bench_report_json(report));
    if (!s.dump.empty())
        for (const auto& p : write_prediction_dumps(report, s.dump)) std::cerr << "wrote " << p.string() << '\n';
    bool any_ok = false;
    for (const BenchRow& row : report.rows) any_ok = any_ok || row.ok;
    return any_ok ? 0 : kExitNumeric;
}

int run_window(const Settings& s) {
    const std::vector<double> series = load_series(s.series);
    const SeriesSpec spec{s.lag, s.horizon, s.train_count};
    if (s.train_count > 0) {
        if (s.train_out.empty() || s.test_out.empty())
            throw InvalidArgument("--train-count needs --train-out and --test-out");
        const TrainTestSplit split = window_split(series, spec);
        write_csv(s.train_out, split.train);
        write_csv(s.test_out, split.test);
        std::cout << split.train.n() << " training and " << split.test.n() << " test examples of dimension "
                  << split.train.d() << '\n';
        return 0;
    }
    const Dataset examples = window_series(series, spec);
    if (s.out.empty()) throw InvalidArgument("window needs --out");
    write_csv(s.out, examples);
    std::cout << examples.n() << " examples of dimension " << examples.d() << '\n';
    return 0;
}

int run_tune(const Settings& s) {
    const Learner learner = parse_learner(s.learner);
    if (learner != Learner::KR_SML && learner != Learner::MLKR)
        throw InvalidArgument("tune applies to KR_SML and MLKR only");
    const Dataset data = load_csv(s.data, column_ref(s.target));
    const GridSearchResult g = grid_search(data, s.alphas, s.mus, s.folds, s.seed, fit_options(s), learner);
    std::cout << grid_table(g) << "best alpha=" << g.best.alpha << " mu=" << g.best.mu << '\n';
    if (!s.out.empty()) write_text(s.out, grid_json(g).dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel regression with sparse learned metrics"};
    app.require_subcommand(1);
    Settings s;

    auto* train = app.add_subcommand("train", "Fit a model and save it");
    train->add_option("--data", s.data, "Training CSV")->required();
    train->add_option("--target", s.target, "Target column name or index (default: last)");
    train->add_option("--learner", s.learner, "KR, MLKR, KR_PCA or KR_SML");
    train->add_option("--model", s.model, "Model file to write")->required();
    train->add_option("--out", s.out, "Write the optimization trace as CSV");
    train->add_flag("--tune", s.tune, "Choose alpha and mu by cross-validation first");
    add_train_flags(train, s);
    add_grid_flags(train, s);

    auto* predict = app.add_subcommand("predict", "Predict targets for a features CSV");
    predict->add_option("--model", s.model, "Model file")->required();
    predict->add_option("--data", s.data, "Query CSV")->required();
    predict->add_option("--target", s.target, "Column to drop if the file still has targets");
    predict->add_option("--out", s.out, "Predictions CSV (default: stdout)");

    auto* eval = app.add_subcommand("eval", "Score a saved model on a labelled CSV");
    eval->add_option("--model", s.model, "Model file")->required();
    eval->add_option("--data,--test", s.data, "Test CSV")->required();
    eval->add_option("--target", s.target, "Target column name or index (default: last)");
    eval->add_option("--out", s.out, "JSON report");
    eval->add_option("--dump", s.dump, "Per-point predictions CSV");

    auto* bench = app.add_subcommand("bench", "Compare KR, MLKR, KR_PCA and KR_SML");
    bench->add_option("--train", s.train_files, "Training CSV (repeat for several splits)");
    bench->add_option("--test", s.test_files, "Test CSV matching each --train");
    bench->add_option("--series", s.series, "Univariate series to window and split");
    bench->add_option("--lag", s.lag, "Lag window for --series")->check(CLI::PositiveNumber);
    bench->add_option("--horizon", s.horizon, "Steps ahead for --series")->check(CLI::PositiveNumber);
    bench->add_option("--train-count", s.train_count, "Leading series entries used for training");
    bench->add_option("--target", s.target, "Target column name or index (default: last)");
    bench->add_option("--mlkr-alpha", s.mlkr_alpha, "Step size for MLKR (default: --alpha)");
    bench->add_option("--out", s.out, "JSON report");
    bench->add_option("--dump", s.dump, "Prefix for per-learner prediction CSVs");
    bench->add_flag("--tune", s.tune, "Choose alpha and mu by cross-validation on the first training set");
    add_train_flags(bench, s);
    add_grid_flags(bench, s);

    auto* window = app.add_subcommand("window", "Turn a series into lagged examples");
    window->add_option("--series", s.series, "Series file")->required();
    window->add_option("--lag", s.lag, "Lag window")->check(CLI::PositiveNumber);
    window->add_option("--horizon", s.horizon, "Steps ahead")->check(CLI::PositiveNumber);
    window->add_option("--train-count", s.train_count, "Split at this series position");
    window->add_option("--out", s.out, "Examples CSV");
    window->add_option("--train-out", s.train_out, "Training examples CSV (with --train-count)");
    window->add_option("--test-out", s.test_out, "Test examples CSV (with --train-count)");

    auto* tune = app.add_subcommand("tune", "Cross-validated grid search over alpha and mu");
    tune->add_option("--data", s.data, "Training CSV")->required();
    tune->add_option("--target", s.target, "Target column name or index (default: last)");
    tune->add_option("--learner", s.learner, "KR_SML or MLKR");
    tune->add_option("--out", s.out, "JSON score table");
    add_train_flags(tune, s);
    add_grid_flags(tune, s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*train) return run_train(s);
        if (*predict) return run_predict(s);
        if (*eval) return run_eval(s);
        if (*bench) return run_bench(s);
        if (*window) return run_window(s);
        if (*tune) return run_tune(s);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
