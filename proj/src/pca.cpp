#include <string>

#include "krsml/errors.hpp"
#include "krsml/learners.hpp"

namespace krsml {

PcaFit pca_fit(const Dataset& data, double variance_threshold) {
    data.validate();
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
        throw InvalidArgument("variance threshold must lie in (0, 1]");
    if (data.n() < 2) throw InsufficientData("PCA needs at least 2 examples");

    const Eigen::VectorXd center = data.features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.features.rowwise() - center.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.n());
    const EigenDecomposition eig = eigen_symmetric(cov);
    const Eigen::VectorXd variance = eig.eigenvalues.cwiseMax(0.0);
    const double total = variance.sum();
    if (!(total > 0.0)) throw DegenerateData("PCA: data has zero variance");

    // The slack keeps a threshold of exactly 1 reachable despite rounding in the sum.
    const double target = variance_threshold * total * (1.0 - 1e-12);
    Index p = 0;
    double cumulative = 0.0;
    while (p < variance.size() && cumulative < target) cumulative += variance(p++);
    p = std::max<Index>(p, 1);

    PcaFit fit;
    fit.projection.basis = eig.eigenvectors.leftCols(p);
    fit.projection.center = center;
    fit.explained_variance = variance;
    return fit;
}

Model krpca_train(const Dataset& data, const TrainConfig& cfg, double variance_threshold) {
    cfg.kernel.validate();
    PcaFit fit = pca_fit(data, variance_threshold);
    Dataset projected(fit.projection.apply(data.features), data.targets);
    const Index p = projected.d();
    return Model(Learner::KR_PCA, MetricMatrix::identity(p), std::move(projected), cfg.kernel,
                 Standardizer::identity(data.d()), std::move(fit.projection));
}

Model kr_model(const Dataset& data, const KernelConfig& kernel) {
    return Model(Learner::KR, MetricMatrix::identity(data.d()), data, kernel, Standardizer::identity(data.d()));
}

} // namespace krsml
