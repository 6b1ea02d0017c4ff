// Gaussian kernel with a full symmetric precision matrix.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace okp {

// One Gaussian regressor: k(x) = exp(-(x-c)^T P (x-c) / h0).
struct KernelNode {
    Eigen::VectorXd center;
    Eigen::MatrixXd precision;  // symmetric, eigenvalues >= eigen_floor
    double h0 = 1.0;
};

// Eigen-factorized form of a precision matrix.
// transform U satisfies v^T P v = ||U^T v||^2; eigenvalues are the
// covariance eigenvalues (inverses of the precision eigenvalues),
// ordered by descending precision eigenvalue.
struct EigenTransform {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    Eigen::MatrixXd transform;
};

inline constexpr double kDefaultEigenFloor = 1e-12;

/// (x-c)^T P (x-c), always >= 0 for a valid node.
double quadratic_form(const KernelNode& node, const Eigen::VectorXd& x);

/// exp(-quadratic_form / h0), in (0, 1].
double eval_kernel(const KernelNode& node, const Eigen::VectorXd& x);

EigenTransform eigen_transform(const Eigen::MatrixXd& precision);

/// h0 * sum_j w_j (x_j - c)(x_j - c)^T.
Eigen::MatrixXd empirical_covariance(const std::vector<Eigen::VectorXd>& samples,
                                     const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& center, double h0);

/// (P + P^T)/2, then eigenvalues clamped at eigen_floor.
Eigen::MatrixXd symmetrize_and_floor(const Eigen::MatrixXd& m,
                                     double eigen_floor = kDefaultEigenFloor);

/// precision <- (1 - c0) * precision + sign * p_sigma p_sigma^T,
/// symmetrized and eigenvalue-floored. sign must be +1 or -1.
KernelNode rank_one_precision_update(const KernelNode& node,
                                     const Eigen::VectorXd& p_sigma, double c0,
                                     int sign,
                                     double eigen_floor = kDefaultEigenFloor);

}  // namespace okp
