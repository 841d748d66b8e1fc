#include <algorithm>
#include <cmath>

#include "krsml/errors.hpp"
#include "krsml/learners.hpp"

namespace krsml {

GradientCheck fd_gradient_check(const std::function<double(const Eigen::MatrixXd&)>& loss_fn,
                                const Eigen::MatrixXd& point, const Eigen::MatrixXd& analytic, double h) {
    if (!(h > 0.0)) throw InvalidArgument("fd_gradient_check: step must be positive");
    if (analytic.rows() != point.rows() || analytic.cols() != point.cols())
        throw InvalidArgument("fd_gradient_check: analytic gradient shape differs from the point");

    GradientCheck out;
    out.numeric.resize(point.rows(), point.cols());
    Eigen::MatrixXd probe = point;
    for (Index j = 0; j < point.cols(); ++j) {
        for (Index i = 0; i < point.rows(); ++i) {
            probe(i, j) = point(i, j) + h;
            const double up = loss_fn(probe);
            probe(i, j) = point(i, j) - h;
            const double down = loss_fn(probe);
            probe(i, j) = point(i, j);
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("fd_gradient_check: non-finite loss while probing");

            const double numeric = (up - down) / (2.0 * h);
            out.numeric(i, j) = numeric;
            const double denom = std::max({std::abs(analytic(i, j)), std::abs(numeric), 1e-12});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic(i, j) - numeric) / denom);
        }
    }
    return out;
}

} // namespace krsml
