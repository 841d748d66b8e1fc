#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace krsml {

using Index = Eigen::Index;

/// Examples stored row-wise with one real target per row.
struct Dataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd targets;
    std::vector<std::string> feature_names;

    Dataset() = default;
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> names = {});

    Index n() const { return features.rows(); }
    Index d() const { return features.cols(); }

    /// Throws InvalidArgument when empty, ragged or non-finite.
    void validate() const;

    /// Rows picked by index, in the given order.
    Dataset subset(const std::vector<Index>& rows) const;
};

} // namespace krsml
