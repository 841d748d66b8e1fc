#include <cmath>
#include <string>

#include "krsml/errors.hpp"
#include "krsml/learners.hpp"
#include "learner_detail.hpp"

namespace krsml {

namespace {

MetricMatrix gram(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd m = a.transpose() * a;
    return MetricMatrix(0.5 * (m + m.transpose()));
}

} // namespace

Eigen::MatrixXd mlkr_gradient(const Dataset& data, const Eigen::MatrixXd& factor, const LooEvaluation& eval,
                              double sigma) {
    if (factor.rows() != data.d() || factor.cols() != data.d())
        throw InvalidArgument("mlkr_gradient: factor must be " + std::to_string(data.d()) + "x" +
                              std::to_string(data.d()));
    // dL/dA = 2 A dL/dM for d_ij = |A x_ij|^2.
    return (2.0 / (sigma * sigma)) * factor * detail::weighted_outer_sum(data, eval);
}

Eigen::MatrixXd mlkr_gradient(const Dataset& data, const Eigen::MatrixXd& factor, const TrainConfig& cfg) {
    cfg.validate();
    if (factor.rows() != data.d() || factor.cols() != data.d())
        throw InvalidArgument("mlkr_gradient: factor dimension mismatch");
    return mlkr_gradient(data, factor, evaluate_loo(data, gram(factor), cfg.kernel), cfg.kernel.sigma);
}

TrainResult mlkr_train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    if (data.n() < 2) throw InsufficientData("MLKR training needs at least 2 examples");

    Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(data.d(), data.d());
    MetricMatrix current = gram(factor);
    LooEvaluation eval = evaluate_loo(data, current, cfg.kernel);
    TrainTrace history;
    history.records.push_back(detail::make_record(0, current, eval.loss, 0.0, 0.0, true));
    double loss = eval.loss;
    detail::require_finite(loss, 0, "MLKR");
    MetricMatrix best = current;
    double best_loss = loss;

    for (int t = 1; t <= cfg.max_iters; ++t) {
        const Eigen::MatrixXd grad = mlkr_gradient(data, factor, eval, cfg.kernel.sigma);
        if (!grad.allFinite()) throw NumericError("MLKR: non-finite gradient at iteration " + std::to_string(t));

        double step = cfg.alpha;
        bool accepted = false;
        bool converged = false;
        for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
            Eigen::MatrixXd cand_factor = factor - step * grad;
            MetricMatrix candidate = gram(cand_factor);
            LooEvaluation cand_eval = evaluate_loo(data, candidate, cfg.kernel);
            detail::require_finite(cand_eval.loss, t, "MLKR");
            if (cand_eval.loss <= loss) {
                converged = std::abs(cand_eval.loss - loss) <= cfg.theta;
                factor = std::move(cand_factor);
                current = std::move(candidate);
                eval = std::move(cand_eval);
                loss = eval.loss;
                accepted = true;
                history.records.push_back(detail::make_record(t, current, loss, 0.0, step, true));
                if (loss < best_loss) {
                    best = current;
                    best_loss = loss;
                }
                break;
            }
        }
        if (!accepted) {
            history.records.push_back(detail::make_record(t, current, loss, 0.0, step * 2.0, false));
            break;
        }
        if (converged) break;
    }
    return {Model(Learner::MLKR, best, data, cfg.kernel, Standardizer::identity(data.d())), history};
}

} // namespace krsml
