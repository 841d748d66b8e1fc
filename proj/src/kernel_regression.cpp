#include "krsml/kernel_regression.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <string>

#include "krsml/errors.hpp"

namespace krsml {

void KernelConfig::validate() const {
    if (k_neighbors < 1) throw InvalidArgument("k_neighbors must be at least 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive and finite");
}

double gaussian_kernel(double dist_sq, double sigma) {
    return std::exp(-dist_sq / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

NeighborIndex::NeighborIndex(const Dataset& data, const MetricMatrix& metric) {
    data.validate();
    if (metric.dim() != data.d()) {
        throw InvalidArgument("metric of dimension " + std::to_string(metric.dim()) + " used with " +
                              std::to_string(data.d()) + "-dimensional data");
    }
    factor_ = metric_factor(metric);
    embedded_ = data.features * factor_.transpose();
}

std::vector<NeighborIndex::Neighbor> NeighborIndex::select(const Eigen::VectorXd& dist, int k,
                                                           std::optional<Index> exclude) const {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(dist.size()));
    for (Index j = 0; j < dist.size(); ++j)
        if (!exclude || *exclude != j) order.push_back(j);
    if (order.empty()) throw InsufficientData("no training examples left for neighbour search");

    const auto take = std::min(order.size(), static_cast<std::size_t>(k));
    const auto closer = [&dist](Index a, Index b) { return dist(a) < dist(b) || (dist(a) == dist(b) && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), closer);

    std::vector<Neighbor> out(take);
    for (std::size_t m = 0; m < take; ++m) out[m] = {order[m], dist(order[m])};
    return out;
}

std::vector<NeighborIndex::Neighbor> NeighborIndex::query(const Eigen::Ref<const Eigen::VectorXd>& x, int k,
                                                          std::optional<Index> exclude) const {
    if (x.size() != factor_.cols()) {
        throw InvalidArgument("query of length " + std::to_string(x.size()) + " for " +
                              std::to_string(factor_.cols()) + "-dimensional data");
    }
    const Eigen::RowVectorXd z = (factor_ * x).transpose();
    const Eigen::VectorXd dist = (embedded_.rowwise() - z).rowwise().squaredNorm();
    return select(dist, k, exclude);
}

std::vector<NeighborIndex::Neighbor> NeighborIndex::query_row(Index i, int k) const {
    const Eigen::RowVectorXd z = embedded_.row(i);
    const Eigen::VectorXd dist = (embedded_.rowwise() - z).rowwise().squaredNorm();
    return select(dist, k, i);
}

std::vector<Index> knn_indices(const Eigen::Ref<const Eigen::VectorXd>& query, const Dataset& data,
                               const MetricMatrix& metric, int k, std::optional<Index> exclude) {
    const auto found = NeighborIndex(data, metric).query(query, k, exclude);
    std::vector<Index> out(found.size());
    std::transform(found.begin(), found.end(), out.begin(), [](const auto& nb) { return nb.index; });
    return out;
}

double nadaraya_watson(const std::vector<NeighborIndex::Neighbor>& neighbors, const Eigen::VectorXd& targets,
                       double sigma, std::vector<double>* weights) {
    if (neighbors.empty()) throw InsufficientData("empty neighbour set");
    double dmin = neighbors.front().dist_sq;
    for (const auto& nb : neighbors) dmin = std::min(dmin, nb.dist_sq);

    const double denom = 2.0 * sigma * sigma;
    std::vector<double> w(neighbors.size());
    double total = 0.0;
    for (std::size_t m = 0; m < neighbors.size(); ++m) {
        w[m] = std::exp(-(neighbors[m].dist_sq - dmin) / denom);
        total += w[m];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Unreachable after the shift unless distances are non-finite.
        std::fill(w.begin(), w.end(), 1.0);
        total = static_cast<double>(w.size());
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < neighbors.size(); ++m) {
        w[m] /= total;
        acc += w[m] * targets(neighbors[m].index);
    }
    if (weights) *weights = std::move(w);
    return acc;
}

double predict_one(const Eigen::Ref<const Eigen::VectorXd>& query, const Dataset& data, const MetricMatrix& metric,
                   const KernelConfig& cfg, std::optional<Index> exclude) {
    cfg.validate();
    const NeighborIndex index(data, metric);
    return nadaraya_watson(index.query(query, cfg.k_neighbors, exclude), data.targets, cfg.sigma);
}

Eigen::VectorXd predict_batch(const Eigen::MatrixXd& queries, const Dataset& data, const MetricMatrix& metric,
                              const KernelConfig& cfg) {
    cfg.validate();
    if (queries.cols() != data.d()) {
        throw InvalidArgument("queries have " + std::to_string(queries.cols()) + " features, model expects " +
                              std::to_string(data.d()));
    }
    const NeighborIndex index(data, metric);
    Eigen::VectorXd out(queries.rows());
    for (Index q = 0; q < queries.rows(); ++q)
        out(q) = nadaraya_watson(index.query(queries.row(q).transpose(), cfg.k_neighbors), data.targets, cfg.sigma);
    return out;
}

LooEvaluation evaluate_loo(const Dataset& data, const MetricMatrix& metric, const KernelConfig& cfg) {
    cfg.validate();
    if (data.n() < 2) throw InsufficientData("leave-one-out needs at least 2 examples");
    const NeighborIndex index(data, metric);
    const auto n = static_cast<std::size_t>(data.n());
    LooEvaluation ev;
    ev.neighbors.resize(n);
    ev.weights.resize(n);
    ev.predictions.resize(data.n());
    for (std::size_t i = 0; i < n; ++i) {
        const auto found = index.query_row(static_cast<Index>(i), cfg.k_neighbors);
        ev.predictions(static_cast<Index>(i)) = nadaraya_watson(found, data.targets, cfg.sigma, &ev.weights[i]);
        ev.neighbors[i].reserve(found.size());
        for (const auto& nb : found) ev.neighbors[i].push_back(nb.index);
    }
    ev.loss = quadratic_loss(data.targets, ev.predictions);
    return ev;
}

LooEvaluation evaluate_loo_frozen(const Dataset& data, const Eigen::MatrixXd& metric, const NeighborSets& neighbors,
                                  double sigma) {
    if (metric.rows() != data.d() || metric.cols() != data.d())
        throw InvalidArgument("evaluate_loo_frozen: metric dimension mismatch");
    if (static_cast<Index>(neighbors.size()) != data.n())
        throw InvalidArgument("evaluate_loo_frozen: one neighbour set per row required");
    const auto n = static_cast<std::size_t>(data.n());
    LooEvaluation ev;
    ev.neighbors = neighbors;
    ev.weights.resize(n);
    ev.predictions.resize(data.n());
    std::vector<NeighborIndex::Neighbor> found;
    for (std::size_t i = 0; i < n; ++i) {
        found.clear();
        const auto xi = data.features.row(static_cast<Index>(i));
        for (const Index j : neighbors[i]) {
            const Eigen::VectorXd diff = (xi - data.features.row(j)).transpose();
            found.push_back({j, quadratic_form(metric, diff)});
        }
        ev.predictions(static_cast<Index>(i)) = nadaraya_watson(found, data.targets, sigma, &ev.weights[i]);
    }
    ev.loss = quadratic_loss(data.targets, ev.predictions);
    return ev;
}

Eigen::VectorXd loo_predictions(const Dataset& data, const MetricMatrix& metric, const KernelConfig& cfg) {
    return evaluate_loo(data, metric, cfg).predictions;
}

double quadratic_loss(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions) {
    if (targets.size() != predictions.size()) {
        throw InvalidArgument("quadratic_loss: " + std::to_string(targets.size()) + " targets vs " +
                              std::to_string(predictions.size()) + " predictions");
    }
    return (targets - predictions).squaredNorm();
}

} // namespace krsml
