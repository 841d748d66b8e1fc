#include "krsml/evaluation.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "krsml/data_io.hpp"
#include "krsml/errors.hpp"

namespace krsml {

namespace {

void check_pair(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions, const char* what) {
    if (targets.size() != predictions.size()) {
        throw InvalidArgument(std::string(what) + ": " + std::to_string(targets.size()) + " targets vs " +
                              std::to_string(predictions.size()) + " predictions");
    }
    if (targets.size() == 0) throw InvalidArgument(std::string(what) + ": empty input");
}

} // namespace

double rmse(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions) {
    check_pair(targets, predictions, "rmse");
    return std::sqrt((targets - predictions).squaredNorm() / static_cast<double>(targets.size()));
}

MareResult mare(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions, double zero_tol) {
    check_pair(targets, predictions, "mare");
    if (!(zero_tol >= 0.0)) throw InvalidArgument("mare: zero_tol must be non-negative");
    MareResult out;
    double sum = 0.0;
    Index used = 0;
    for (Index i = 0; i < targets.size(); ++i) {
        if (std::abs(targets(i)) <= zero_tol) {
            ++out.skipped;
            continue;
        }
        sum += std::abs(targets(i) - predictions(i)) / std::abs(targets(i));
        ++used;
    }
    if (used == 0) throw DegenerateData("mare: every target is zero");
    out.value = sum / static_cast<double>(used);
    return out;
}

EvalReport evaluate(const Model& model, const Dataset& test) {
    test.validate();
    EvalReport r;
    r.learner = model.learner();
    r.targets = test.targets;
    r.predictions = model.predict(test.features);
    r.n_test = test.n();
    r.original_dim = model.input_dim();
    r.metric_dim = model.metric().dim();
    r.rmse = rmse(r.targets, r.predictions);
    r.accumulated_error = quadratic_loss(r.targets, r.predictions);
    // A test set of all-zero targets still gets RMSE and L; MARE is reported as NaN.
    try {
        const MareResult m = mare(r.targets, r.predictions);
        r.mare = m.value;
        r.skipped_mare_points = m.skipped;
    } catch (const DegenerateData&) {
        r.mare = std::numeric_limits<double>::quiet_NaN();
        r.skipped_mare_points = r.n_test;
    }
    r.metric_rank = numerical_rank(model.metric());
    return r;
}

FitResult fit(Learner learner, const Dataset& train, const FitOptions& options) {
    train.validate();
    // KR and KR_PCA never read the optimizer settings, so only the kernel is checked here.
    options.train.kernel.validate();
    const Standardizer s = options.standardize ? fit_standardizer(train) : Standardizer::identity(train.d());
    const Dataset data = options.standardize ? s.apply(train) : train;
    switch (learner) {
    case Learner::KR: return {kr_model(data, options.train.kernel).with_standardizer(s), std::nullopt};
    case Learner::KR_PCA:
        return {krpca_train(data, options.train, options.variance_threshold).with_standardizer(s), std::nullopt};
    case Learner::MLKR: {
        TrainResult r = mlkr_train(data, options.train);
        return {r.model.with_standardizer(s), std::move(r.trace)};
    }
    case Learner::KR_SML: {
        TrainResult r = krsml_train(data, options.train);
        return {r.model.with_standardizer(s), std::move(r.trace)};
    }
    }
    throw InvalidArgument("unknown learner");
}

GridSearchResult grid_search(const Dataset& data, const std::vector<double>& alphas, const std::vector<double>& mus,
                             int folds, std::uint64_t seed, const FitOptions& base, Learner learner) {
    if (alphas.empty() || mus.empty()) throw InvalidArgument("grid_search: empty grid");
    if (folds < 2) throw InvalidArgument("grid_search: at least 2 folds required");
    data.validate();
    const auto partition = split_folds(data.n(), folds, seed);

    const auto run_cell = [&](double alpha, double mu) {
        GridCell cell{alpha, mu, 0.0, {}, false, {}};
        try {
            FitOptions opt = base;
            opt.train.alpha = alpha;
            opt.train.mu = mu;
            for (std::size_t f = 0; f < partition.size(); ++f) {
                const TrainTestSplit split = fold_split(data, partition, f);
                const FitResult fitted = fit(learner, split.train, opt);
                cell.fold_rmse.push_back(rmse(split.test.targets, fitted.model.predict(split.test.features)));
            }
            double sum = 0.0;
            for (const double v : cell.fold_rmse) sum += v;
            cell.mean_rmse = sum / static_cast<double>(cell.fold_rmse.size());
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
            cell.mean_rmse = std::numeric_limits<double>::infinity();
        }
        return cell;
    };

    std::vector<std::future<GridCell>> pending;
    for (const double a : alphas)
        for (const double m : mus) pending.push_back(std::async(std::launch::async, run_cell, a, m));

    GridSearchResult out;
    for (auto& p : pending) out.table.push_back(p.get());

    const auto better = [](const GridCell& a, const GridCell& b) {
        if (a.failed != b.failed) return !a.failed;
        if (a.mean_rmse != b.mean_rmse) return a.mean_rmse < b.mean_rmse;
        if (a.mu != b.mu) return a.mu < b.mu;
        return a.alpha < b.alpha;
    };
    for (std::size_t i = 1; i < out.table.size(); ++i)
        if (better(out.table[i], out.table[out.best_index])) out.best_index = i;
    if (out.table[out.best_index].failed)
        throw NumericError("grid_search: every cell failed (" + out.table[out.best_index].error + ")");

    out.best = base.train;
    out.best.alpha = out.table[out.best_index].alpha;
    out.best.mu = out.table[out.best_index].mu;
    return out;
}

} // namespace krsml
