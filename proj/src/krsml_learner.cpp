#include "krsml/learners.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krsml/errors.hpp"
#include "learner_detail.hpp"

namespace krsml {

void TrainConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("mu must be non-negative");
    if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
    if (max_iters < 0) throw InvalidArgument("max_iters must be non-negative");
    if (max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
    kernel.validate();
}

int TrainTrace::iterations() const {
    return records.empty() ? 0 : records.back().iteration;
}

int TrainTrace::accepted_steps() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(),
                                          [](const TraceRecord& r) { return r.iteration > 0 && r.accepted; }));
}

const TraceRecord& TrainTrace::best() const {
    if (records.empty()) throw InvalidArgument("empty training trace");
    const TraceRecord* best = &records.front();
    for (const auto& r : records)
        if (r.accepted && r.objective < best->objective) best = &r;
    return *best;
}

namespace detail {

Eigen::MatrixXd weighted_outer_sum(const Dataset& data, const LooEvaluation& eval) {
    const Index d = data.d();
    Index rows = 0;
    for (const auto& nb : eval.neighbors) rows += static_cast<Index>(nb.size());

    Eigen::MatrixXd diffs(rows, d);
    Eigen::VectorXd coef(rows);
    Index r = 0;
    for (Index i = 0; i < data.n(); ++i) {
        const auto& nb = eval.neighbors[static_cast<std::size_t>(i)];
        const auto& w = eval.weights[static_cast<std::size_t>(i)];
        const double yhat = eval.predictions(i);
        const double residual = yhat - data.targets(i);
        for (std::size_t m = 0; m < nb.size(); ++m, ++r) {
            diffs.row(r) = data.features.row(i) - data.features.row(nb[m]);
            coef(r) = residual * (yhat - data.targets(nb[m])) * w[m];
        }
    }
    const Eigen::MatrixXd g = diffs.transpose() * coef.asDiagonal() * diffs;
    return 0.5 * (g + g.transpose());
}

TraceRecord make_record(int iteration, const MetricMatrix& m, double loss, double mu, double step, bool accepted) {
    const EigenDecomposition eig = eigen_symmetric(m.entries());
    const double top = eig.eigenvalues(0);
    TraceRecord rec;
    rec.iteration = iteration;
    rec.loss = loss;
    rec.trace = trace(m);
    rec.objective = loss + mu * rec.trace;
    rec.rank = top <= 0.0 ? 0 : static_cast<int>((eig.eigenvalues.array() > 1e-8 * top).count());
    rec.min_eigenvalue = eig.eigenvalues.minCoeff();
    rec.step = step;
    rec.accepted = accepted;
    return rec;
}

void require_finite(double value, int iteration, const char* learner) {
    if (!std::isfinite(value)) {
        throw NumericError(std::string(learner) + ": non-finite objective at iteration " +
                           std::to_string(iteration));
    }
}

} // namespace detail

double krsml_objective(const Dataset& data, const MetricMatrix& metric, const TrainConfig& cfg) {
    return evaluate_loo(data, metric, cfg.kernel).loss + cfg.mu * trace(metric);
}

Eigen::MatrixXd krsml_gradient(const Dataset& data, const LooEvaluation& eval, double sigma, double mu) {
    Eigen::MatrixXd g = detail::weighted_outer_sum(data, eval) / (sigma * sigma);
    g.diagonal().array() += mu;
    return g;
}

Eigen::MatrixXd krsml_gradient(const Dataset& data, const MetricMatrix& metric, const TrainConfig& cfg) {
    cfg.validate();
    return krsml_gradient(data, evaluate_loo(data, metric, cfg.kernel), cfg.kernel.sigma, cfg.mu);
}

TrainResult krsml_train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    if (data.n() < 2) throw InsufficientData("KR_SML training needs at least 2 examples");

    MetricMatrix current = MetricMatrix::identity(data.d());
    LooEvaluation eval = evaluate_loo(data, current, cfg.kernel);
    TrainTrace history;
    history.records.push_back(detail::make_record(0, current, eval.loss, cfg.mu, 0.0, true));
    double objective = history.records.back().objective;
    detail::require_finite(objective, 0, "KR_SML");
    MetricMatrix best = current;
    double best_objective = objective;

    for (int t = 1; t <= cfg.max_iters; ++t) {
        const Eigen::MatrixXd grad = krsml_gradient(data, eval, cfg.kernel.sigma, cfg.mu);
        if (!grad.allFinite()) throw NumericError("KR_SML: non-finite gradient at iteration " + std::to_string(t));

        double step = cfg.alpha;
        bool accepted = false;
        bool converged = false;
        for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
            MetricMatrix candidate = project_psd(current.entries() - step * grad);
            LooEvaluation cand_eval = evaluate_loo(data, candidate, cfg.kernel);
            const double cand_objective = cand_eval.loss + cfg.mu * trace(candidate);
            detail::require_finite(cand_objective, t, "KR_SML");
            if (cand_objective <= objective) {
                const double change = std::abs(cand_objective - objective);
                current = std::move(candidate);
                eval = std::move(cand_eval);
                objective = cand_objective;
                accepted = true;
                history.records.push_back(detail::make_record(t, current, eval.loss, cfg.mu, step, true));
                if (objective < best_objective) {
                    best = current;
                    best_objective = objective;
                }
                converged = change <= cfg.theta;
                break;
            }
        }
        if (!accepted) {
            history.records.push_back(detail::make_record(t, current, eval.loss, cfg.mu, step * 2.0, false));
            break;
        }
        if (converged) break;
    }
    return {Model(Learner::KR_SML, best, data, cfg.kernel, Standardizer::identity(data.d())), history};
}

} // namespace krsml
