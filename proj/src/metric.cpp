#include "krsml/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krsml/errors.hpp"

namespace krsml {

namespace {

constexpr double kSymmetryTol = 1e-12;

void require_square(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidArgument(std::string(what) + ": expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

bool is_diagonal(const Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j && m(i, j) != 0.0) return false;
    return true;
}

} // namespace

MetricMatrix::MetricMatrix(const Eigen::MatrixXd& entries) {
    require_square(entries, "MetricMatrix");
    if (!entries.allFinite()) throw NumericError("MetricMatrix: non-finite entries");
    const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * scale) {
        throw InvalidArgument("MetricMatrix: matrix is not symmetric (max |M - M^T| = " +
                              std::to_string(asym) + ")");
    }
    entries_ = 0.5 * (entries + entries.transpose());
}

MetricMatrix MetricMatrix::identity(Eigen::Index dim) {
    if (dim < 1) throw InvalidArgument("MetricMatrix::identity: dimension must be positive");
    return MetricMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

EigenDecomposition eigen_symmetric(const Eigen::MatrixXd& m) {
    require_square(m, "eigen_symmetric");
    if (!m.allFinite()) throw NumericError("eigen_symmetric: non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("eigen_symmetric: decomposition failed");
    // Eigen returns ascending order.
    EigenDecomposition out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

double mahalanobis_sq(const MetricMatrix& m, const Eigen::Ref<const Eigen::VectorXd>& xi,
                      const Eigen::Ref<const Eigen::VectorXd>& xj) {
    if (xi.size() != m.dim() || xj.size() != m.dim()) {
        throw InvalidArgument("mahalanobis_sq: vectors of length " + std::to_string(xi.size()) + " and " +
                              std::to_string(xj.size()) + " for a metric of dimension " +
                              std::to_string(m.dim()));
    }
    const Eigen::VectorXd diff = xi - xj;
    return std::max(0.0, diff.dot(m.entries() * diff));
}

double quadratic_form(const Eigen::MatrixXd& m, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (m.rows() != v.size() || m.cols() != v.size())
        throw InvalidArgument("quadratic_form: dimension mismatch");
    return v.dot(m * v);
}

double mixed_21_norm(const Eigen::MatrixXd& m) {
    require_square(m, "mixed_21_norm");
    return m.rowwise().norm().sum();
}

double trace(const Eigen::MatrixXd& m) {
    require_square(m, "trace");
    return m.trace();
}

MetricMatrix project_psd(const Eigen::MatrixXd& m) {
    require_square(m, "project_psd");
    const EigenDecomposition eig = eigen_symmetric(m);
    if (eig.eigenvalues.minCoeff() >= 0.0) return MetricMatrix(0.5 * (m + m.transpose()));

    const Eigen::VectorXd clamped = eig.eigenvalues.cwiseMax(0.0);
    const Eigen::MatrixXd& v = eig.eigenvectors;
    const Eigen::MatrixXd rebuilt = v * clamped.asDiagonal() * v.transpose();
    return MetricMatrix(0.5 * (rebuilt + rebuilt.transpose()));
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    return eigen_symmetric(m).eigenvalues.minCoeff();
}

int numerical_rank(const MetricMatrix& m, double rel_tol) {
    if (!(rel_tol > 0.0)) throw InvalidArgument("numerical_rank: rel_tol must be positive");
    const Eigen::VectorXd ev = eigen_symmetric(m.entries()).eigenvalues;
    const double top = ev(0);
    if (top <= 0.0) return 0;
    return static_cast<int>((ev.array() > rel_tol * top).count());
}

Eigen::MatrixXd metric_factor(const MetricMatrix& m) {
    const Eigen::MatrixXd& e = m.entries();
    if (is_diagonal(e)) return e.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const EigenDecomposition eig = eigen_symmetric(e);
    return eig.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors.transpose();
}

} // namespace krsml
