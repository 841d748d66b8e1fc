#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "krsml/dataset.hpp"
#include "krsml/learners.hpp"
#include "krsml/model.hpp"

namespace krsml {

double rmse(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions);

struct MareResult {
    double value = 0.0;
    Index skipped = 0; ///< points with |y| <= zero_tol left out of the mean
};

MareResult mare(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions, double zero_tol = 1e-12);

struct TraceSummary {
    double final_objective = 0.0;
    int iterations = 0;
    int accepted_steps = 0;
};

struct EvalReport {
    Learner learner = Learner::KR;
    double rmse = 0.0;
    double mare = 0.0;
    double accumulated_error = 0.0; ///< sum of squared test residuals
    int metric_rank = 0;
    Index original_dim = 0;
    Index metric_dim = 0;
    Index n_test = 0;
    Index skipped_mare_points = 0;
    std::optional<TraceSummary> train_summary;
    Eigen::VectorXd targets;
    Eigen::VectorXd predictions;
};

/// Predicts every test row (no exclusion) and assembles the metrics.
/// `test` carries raw features in the model's input dimension.
EvalReport evaluate(const Model& model, const Dataset& test);

struct FitOptions {
    TrainConfig train;
    double variance_threshold = 0.95;
    bool standardize = true;
};

struct FitResult {
    Model model;
    std::optional<TrainTrace> trace;
};

/// Standardizes (unless disabled) on `train` and trains the chosen learner.
FitResult fit(Learner learner, const Dataset& train, const FitOptions& options);

struct GridCell {
    double alpha = 0.0;
    double mu = 0.0;
    double mean_rmse = 0.0;
    std::vector<double> fold_rmse;
    bool failed = false;
    std::string error;
};

struct GridSearchResult {
    TrainConfig best;
    std::vector<GridCell> table; ///< alphas outer, mus inner
    std::size_t best_index = 0;
};

/// k-fold cross-validated RMSE for every (alpha, mu) pair. The winner has the
/// lowest mean RMSE; ties go to the smaller mu, then the smaller alpha, then
/// the earlier cell. Cells that throw are marked failed and never win.
GridSearchResult grid_search(const Dataset& data, const std::vector<double>& alphas, const std::vector<double>& mus,
                             int folds, std::uint64_t seed, const FitOptions& base,
                             Learner learner = Learner::KR_SML);

} // namespace krsml
