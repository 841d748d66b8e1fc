#pragma once

#include "krsml/learners.hpp"

namespace krsml::detail {

/// sum_i (yhat_i - y_i) sum_j (yhat_i - y_j) w_ij x_ij x_ij^T, symmetrized,
/// without the 1/sigma^2 factor. Equals sigma^2 * dLoss/dM.
Eigen::MatrixXd weighted_outer_sum(const Dataset& data, const LooEvaluation& eval);

TraceRecord make_record(int iteration, const MetricMatrix& m, double loss, double mu, double step, bool accepted);

void require_finite(double value, int iteration, const char* learner);

} // namespace krsml::detail
