#include "krsml/model.hpp"

#include <string>

#include "krsml/errors.hpp"

namespace krsml {

std::string_view learner_name(Learner l) {
    switch (l) {
    case Learner::KR: return "KR";
    case Learner::MLKR: return "MLKR";
    case Learner::KR_PCA: return "KR_PCA";
    case Learner::KR_SML: return "KR_SML";
    }
    return "?";
}

Learner parse_learner(std::string_view name) {
    for (const Learner l : {Learner::KR, Learner::MLKR, Learner::KR_PCA, Learner::KR_SML})
        if (learner_name(l) == name) return l;
    throw InvalidArgument("unknown learner '" + std::string(name) + "' (expected KR, MLKR, KR_PCA or KR_SML)");
}

Eigen::MatrixXd PcaProjection::apply(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != basis.rows()) throw InvalidArgument("PCA projection: dimension mismatch");
    return (rows.rowwise() - center.transpose()) * basis;
}

Model::Model(Learner learner, MetricMatrix metric, Dataset training_data, KernelConfig kernel,
             Standardizer standardizer, std::optional<PcaProjection> pca)
    : learner_(learner), metric_(std::move(metric)), training_(std::move(training_data)), kernel_(kernel),
      standardizer_(std::move(standardizer)), pca_(std::move(pca)) {
    training_.validate();
    kernel_.validate();
    if (metric_.dim() != training_.d()) throw InvalidArgument("model metric does not match training dimension");
    if (standardizer_.means.size() != standardizer_.scales.size())
        throw InvalidArgument("model standardizer is malformed");
    const Index expected_input = pca_ ? pca_->basis.rows() : training_.d();
    if (standardizer_.means.size() != expected_input)
        throw InvalidArgument("model standardizer does not match the input dimension");
    if (pca_ && (pca_->basis.cols() != training_.d() || pca_->center.size() != pca_->basis.rows()))
        throw InvalidArgument("model PCA basis does not match the training dimension");
}

Model Model::with_standardizer(Standardizer s) const {
    return Model(learner_, metric_, training_, kernel_, std::move(s), pca_);
}

Eigen::MatrixXd Model::transform(const Eigen::MatrixXd& raw) const {
    if (raw.cols() != input_dim()) {
        throw InvalidArgument("model expects " + std::to_string(input_dim()) + " features, got " +
                              std::to_string(raw.cols()));
    }
    const Eigen::MatrixXd standardized = standardizer_.apply(raw);
    return pca_ ? pca_->apply(standardized) : standardized;
}

Eigen::VectorXd Model::predict(const Eigen::MatrixXd& raw) const {
    return predict_batch(transform(raw), training_, metric_, kernel_);
}

double Model::predict_single(const Eigen::VectorXd& raw) const {
    return predict(Eigen::MatrixXd(raw.transpose()))(0);
}

} // namespace krsml
