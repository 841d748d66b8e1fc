#pragma once

#include <Eigen/Dense>

namespace krsml {

/// Symmetric d x d matrix defining the squared distance (a-b)^T M (a-b).
///
/// Construction rejects non-square, non-finite or visibly asymmetric input and
/// stores the exact symmetrization (M + M^T)/2. Positive semidefiniteness is not
/// checked here; project_psd() is the way to obtain a guaranteed PSD metric.
/// A rank-deficient metric is a pseudometric: distinct points may be at distance 0.
class MetricMatrix {
public:
    explicit MetricMatrix(const Eigen::MatrixXd& entries);

    static MetricMatrix identity(Eigen::Index dim);

    Eigen::Index dim() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order and
/// eigenvectors stored as orthonormal columns.
struct EigenDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
};

/// Throws NumericError on non-finite entries. The input is symmetrized first.
EigenDecomposition eigen_symmetric(const Eigen::MatrixXd& m);

double mahalanobis_sq(const MetricMatrix& m, const Eigen::Ref<const Eigen::VectorXd>& xi,
                      const Eigen::Ref<const Eigen::VectorXd>& xj);

/// Quadratic form for an arbitrary square matrix. Used where the matrix is a
/// perturbed, possibly non-symmetric point (finite-difference probing).
double quadratic_form(const Eigen::MatrixXd& m, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Sum of the Euclidean norms of the rows.
double mixed_21_norm(const Eigen::MatrixXd& m);
inline double mixed_21_norm(const MetricMatrix& m) { return mixed_21_norm(m.entries()); }

double trace(const Eigen::MatrixXd& m);
inline double trace(const MetricMatrix& m) { return trace(m.entries()); }

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
/// Inputs that are already PSD come back as their symmetrization, bit for bit.
MetricMatrix project_psd(const Eigen::MatrixXd& m);

double min_eigenvalue(const Eigen::MatrixXd& m);

/// Number of eigenvalues above rel_tol * lambda_max; 0 when lambda_max <= 0.
int numerical_rank(const MetricMatrix& m, double rel_tol = 1e-8);

/// Factor L with M = L^T L so that mahalanobis_sq(M, a, b) = |L a - L b|^2.
/// Diagonal metrics take the exact sqrt-of-diagonal route; negative
/// eigenvalues are treated as zero.
Eigen::MatrixXd metric_factor(const MetricMatrix& m);

} // namespace krsml
