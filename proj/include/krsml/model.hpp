#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "krsml/data_io.hpp"
#include "krsml/dataset.hpp"
#include "krsml/kernel_regression.hpp"
#include "krsml/metric.hpp"

namespace krsml {

enum class Learner { KR, MLKR, KR_PCA, KR_SML };

std::string_view learner_name(Learner l);
Learner parse_learner(std::string_view name);

/// Linear map applied to standardized queries before the metric: z = B^T (x - center).
struct PcaProjection {
    Eigen::MatrixXd basis; ///< d x p, orthonormal columns
    Eigen::VectorXd center;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

/// A trained kernel regressor. Holds the metric, the training examples in the
/// metric's coordinate system and the transforms that take raw queries there.
class Model {
public:
    Model(Learner learner, MetricMatrix metric, Dataset training_data, KernelConfig kernel,
          Standardizer standardizer, std::optional<PcaProjection> pca = std::nullopt);

    Learner learner() const { return learner_; }
    const MetricMatrix& metric() const { return metric_; }
    const Dataset& training_data() const { return training_; }
    const KernelConfig& kernel() const { return kernel_; }
    const Standardizer& standardizer() const { return standardizer_; }
    const std::optional<PcaProjection>& pca() const { return pca_; }

    /// Feature count expected from raw queries.
    Index input_dim() const { return standardizer_.means.size(); }

    /// Copy with a different input standardization.
    Model with_standardizer(Standardizer s) const;

    /// Raw queries -> coordinates the metric acts on.
    Eigen::MatrixXd transform(const Eigen::MatrixXd& raw) const;

    Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
    double predict_single(const Eigen::VectorXd& raw) const;

private:
    Learner learner_;
    MetricMatrix metric_;
    Dataset training_;
    KernelConfig kernel_;
    Standardizer standardizer_;
    std::optional<PcaProjection> pca_;
};

} // namespace krsml
