#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "krsml/dataset.hpp"
#include "krsml/metric.hpp"

namespace krsml {

struct KernelConfig {
    int k_neighbors = 30;
    double sigma = 1.0 / std::sqrt(2.0);

    void validate() const;
};

/// Gaussian density of the squared distance: exp(-d / (2 sigma^2)) / (sigma sqrt(2 pi)).
double gaussian_kernel(double dist_sq, double sigma);

/// Exhaustive nearest-neighbour search under a fixed metric.
///
/// The training points are mapped once through a factor L of the metric
/// (M = L^T L), after which each query costs O(n d). Ties are broken by
/// ascending training index.
class NeighborIndex {
public:
    NeighborIndex(const Dataset& data, const MetricMatrix& metric);

    struct Neighbor {
        Index index;
        double dist_sq;
    };

    /// Up to k closest training rows sorted by (distance, index).
    std::vector<Neighbor> query(const Eigen::Ref<const Eigen::VectorXd>& x, int k,
                                std::optional<Index> exclude = std::nullopt) const;

    /// Same as query() for the training row i, which is excluded from its own set.
    std::vector<Neighbor> query_row(Index i, int k) const;

    Index size() const { return embedded_.rows(); }

private:
    std::vector<Neighbor> select(const Eigen::VectorXd& dist, int k, std::optional<Index> exclude) const;

    Eigen::MatrixXd factor_;
    Eigen::MatrixXd embedded_;
};

std::vector<Index> knn_indices(const Eigen::Ref<const Eigen::VectorXd>& query, const Dataset& data,
                               const MetricMatrix& metric, int k, std::optional<Index> exclude = std::nullopt);

/// Nadaraya-Watson average over a neighbour set. Weights are shifted by the
/// smallest distance before exponentiation; the shift and the kernel's
/// normalizing constant cancel in the ratio. Fills `weights` (normalized)
/// when non-null.
double nadaraya_watson(const std::vector<NeighborIndex::Neighbor>& neighbors, const Eigen::VectorXd& targets,
                       double sigma, std::vector<double>* weights = nullptr);

double predict_one(const Eigen::Ref<const Eigen::VectorXd>& query, const Dataset& data, const MetricMatrix& metric,
                   const KernelConfig& cfg, std::optional<Index> exclude = std::nullopt);

/// Predictions for every row of `queries` against `data` (no exclusion).
Eigen::VectorXd predict_batch(const Eigen::MatrixXd& queries, const Dataset& data, const MetricMatrix& metric,
                              const KernelConfig& cfg);

/// Leave-one-out predictions: element i excludes training row i.
Eigen::VectorXd loo_predictions(const Dataset& data, const MetricMatrix& metric, const KernelConfig& cfg);

double quadratic_loss(const Eigen::VectorXd& targets, const Eigen::VectorXd& predictions);

/// Neighbour lists of every training row, one per row.
using NeighborSets = std::vector<std::vector<Index>>;

/// Everything the metric learners need from one leave-one-out pass.
struct LooEvaluation {
    NeighborSets neighbors;
    /// weights[i][m] is the normalized kernel weight of neighbors[i][m].
    std::vector<std::vector<double>> weights;
    Eigen::VectorXd predictions;
    double loss = 0.0;
};

/// Leave-one-out pass with neighbour sets chosen under `metric`.
LooEvaluation evaluate_loo(const Dataset& data, const MetricMatrix& metric, const KernelConfig& cfg);

/// Leave-one-out pass over fixed neighbour sets with distances given by the
/// quadratic form of an arbitrary square matrix. This is the smooth piece of
/// the objective that gradients describe.
LooEvaluation evaluate_loo_frozen(const Dataset& data, const Eigen::MatrixXd& metric, const NeighborSets& neighbors,
                                  double sigma);

} // namespace krsml
