#include "okp/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace okp {

namespace {

void check_input(const KernelNode& node, const Eigen::VectorXd& x) {
    if (x.size() != node.center.size())
        throw std::invalid_argument("kernel input dimension mismatch");
    if (!x.allFinite()) throw std::domain_error("non-finite kernel input");
}

}  // namespace

double quadratic_form(const KernelNode& node, const Eigen::VectorXd& x) {
    check_input(node, x);
    const Eigen::VectorXd d = x - node.center;
    return d.dot(node.precision * d);
}

double eval_kernel(const KernelNode& node, const Eigen::VectorXd& x) {
    return std::exp(-quadratic_form(node, x) / node.h0);
}

EigenTransform eigen_transform(const Eigen::MatrixXd& precision) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(precision);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");
    const Eigen::Index n = precision.rows();
    EigenTransform t;
    t.eigenvalues.resize(n);
    t.eigenvectors.resize(n, n);
    t.transform.resize(n, n);
    // Eigen returns ascending order; flip to descending precision eigenvalue.
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mu = es.eigenvalues()(n - 1 - j);  // precision eigenvalue
        if (mu <= 0.0)
            throw std::domain_error("precision matrix not positive definite");
        t.eigenvalues(j) = 1.0 / mu;  // covariance eigenvalue
        t.eigenvectors.col(j) = es.eigenvectors().col(n - 1 - j);
        t.transform.col(j) = t.eigenvectors.col(j) * std::sqrt(mu);
    }
    return t;
}

Eigen::MatrixXd empirical_covariance(const std::vector<Eigen::VectorXd>& samples,
                                     const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& center, double h0) {
    if (samples.empty()) throw std::invalid_argument("empty sample list");
    if (weights.size() != static_cast<Eigen::Index>(samples.size()))
        throw std::invalid_argument("weights length mismatch");
    if (weights.minCoeff() < 0.0)
        throw std::invalid_argument("negative sample weight");
    const Eigen::Index n = center.size();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (size_t j = 0; j < samples.size(); ++j) {
        const Eigen::VectorXd d = samples[j] - center;
        // Outer product first so the accumulation is symmetric to the bit.
        const Eigen::MatrixXd outer = d * d.transpose();
        cov.noalias() += weights(static_cast<Eigen::Index>(j)) * outer;
    }
    return h0 * cov;
}

Eigen::MatrixXd symmetrize_and_floor(const Eigen::MatrixXd& m,
                                     double eigen_floor) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");
    if (es.eigenvalues().minCoeff() >= eigen_floor) return sym;
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(eigen_floor);
    Eigen::MatrixXd out =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

KernelNode rank_one_precision_update(const KernelNode& node,
                                     const Eigen::VectorXd& p_sigma, double c0,
                                     int sign, double eigen_floor) {
    if (p_sigma.size() != node.center.size())
        throw std::invalid_argument("p_sigma dimension mismatch");
    if (!(c0 > 0.0 && c0 < 1.0)) throw std::invalid_argument("c0 must be in (0,1)");
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    Eigen::MatrixXd p = (1.0 - c0) * node.precision;
    p.noalias() += static_cast<double>(sign) * p_sigma * p_sigma.transpose();
    KernelNode out = node;
    out.precision = symmetrize_and_floor(p, eigen_floor);
    return out;
}

}  // namespace okp
