#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "krsml/dataset.hpp"
#include "krsml/kernel_regression.hpp"
#include "krsml/metric.hpp"
#include "krsml/model.hpp"

namespace krsml {

struct TrainConfig {
    double alpha = 1e-3;   ///< gradient step size
    double mu = 0.0;       ///< weight of the trace regularizer (KR_SML only)
    double theta = 1e-4;   ///< stop once |L_t - L_{t-1}| <= theta
    int max_iters = 200;   ///< 0 returns the identity metric untouched
    int max_halvings = 20; ///< backtracking budget per step
    KernelConfig kernel;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TraceRecord {
    int iteration = 0;
    double objective = 0.0; ///< loss + mu * trace(M)
    double loss = 0.0;      ///< leave-one-out quadratic loss
    double trace = 0.0;
    int rank = 0;
    double min_eigenvalue = 0.0;
    double step = 0.0; ///< step size actually used (0 for the initial point)
    bool accepted = true;
};

/// Per-iteration history. Record 0 is the starting point.
struct TrainTrace {
    std::vector<TraceRecord> records;

    int iterations() const;
    int accepted_steps() const;
    const TraceRecord& best() const;
};

struct TrainResult {
    Model model;
    TrainTrace trace;
};

/// Objective value and data for the trace-regularized learner at a metric.
double krsml_objective(const Dataset& data, const MetricMatrix& metric, const TrainConfig& cfg);

/// Gradient of loss + mu * trace(M) over the given neighbour sets:
/// (1/sigma^2) sum_i (yhat_i - y_i) sum_j (yhat_i - y_j) w_ij x_ij x_ij^T + mu I,
/// where w_ij are the normalized kernel weights. Returned symmetrized.
Eigen::MatrixXd krsml_gradient(const Dataset& data, const LooEvaluation& eval, double sigma, double mu);

/// Same, with neighbour sets recomputed under `metric`.
Eigen::MatrixXd krsml_gradient(const Dataset& data, const MetricMatrix& metric, const TrainConfig& cfg);

/// Projected gradient descent from M = I on loss + mu * trace(M). Each step
/// is M <- project_psd(M - a G) with a = alpha halved until the objective does
/// not increase; a step that fails max_halvings times is rejected and ends the
/// run. The returned model carries the best iterate and an identity
/// standardizer (the data is expected to be standardized upstream).
TrainResult krsml_train(const Dataset& data, const TrainConfig& cfg);

/// Gradient of the leave-one-out loss with respect to the factor A of M = A^T A,
/// over the given neighbour sets (evaluated at M = A^T A).
Eigen::MatrixXd mlkr_gradient(const Dataset& data, const Eigen::MatrixXd& factor, const LooEvaluation& eval,
                              double sigma);

Eigen::MatrixXd mlkr_gradient(const Dataset& data, const Eigen::MatrixXd& factor, const TrainConfig& cfg);

/// Gradient descent on A from A = I with the same stopping and backtracking
/// rules as krsml_train; mu is ignored. Model metric is A^T A.
TrainResult mlkr_train(const Dataset& data, const TrainConfig& cfg);

struct PcaFit {
    PcaProjection projection;
    Eigen::VectorXd explained_variance; ///< all d eigenvalues, descending
};

/// Smallest leading principal subspace whose cumulative explained variance
/// reaches `variance_threshold` (in (0, 1]).
PcaFit pca_fit(const Dataset& data, double variance_threshold);

/// Euclidean kernel regression on the leading principal components.
Model krpca_train(const Dataset& data, const TrainConfig& cfg, double variance_threshold);

/// The untrained baseline: identity metric on the given data.
Model kr_model(const Dataset& data, const KernelConfig& kernel);

struct GradientCheck {
    double max_rel_error = 0.0;
    Eigen::MatrixXd numeric;
};

/// Central differences (L(X + h E_ij) - L(X - h E_ij)) / 2h against `analytic`,
/// entry by entry; relative error uses max(|analytic|, |numeric|, 1e-12).
GradientCheck fd_gradient_check(const std::function<double(const Eigen::MatrixXd&)>& loss_fn,
                                const Eigen::MatrixXd& point, const Eigen::MatrixXd& analytic, double h = 1e-5);

} // namespace krsml
