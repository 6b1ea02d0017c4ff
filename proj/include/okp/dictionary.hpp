// Online kernel-dictionary selection: ALD, quantization distance,
// loss-change significance, orthogonal forward selection, node replacement.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "okp/kernel.hpp"

namespace okp {

// Precision/h0 shared by all nodes of one series group.
struct KernelConfig {
    Eigen::MatrixXd precision;
    double h0 = 1.0;

    static KernelConfig isotropic(int dim, double scale = 1.0, double h0 = 1.0) {
        return {scale * Eigen::MatrixXd::Identity(dim, dim), h0};
    }
};

struct AldResult {
    double delta1 = 0.0;
    Eigen::VectorXd alpha;
};

struct OfsSelection {
    std::vector<int> selected_indices;       // in pick order
    std::vector<double> err_ratios;          // per-step error reduction ratio
    std::vector<Eigen::VectorXd> orthogonal_basis;
    Eigen::VectorXd g;
    Eigen::MatrixXd A_upper;                 // unit upper triangular
};

// Ordered node set with incrementally maintained Gram matrix and inverse.
// All nodes share one KernelConfig; the self-kernel is 1 so the Gram
// diagonal is all ones.
class Dictionary {
public:
    explicit Dictionary(KernelConfig cfg,
                        std::optional<int> max_size = std::nullopt);

    int size() const { return static_cast<int>(centers_.size()); }
    bool empty() const { return centers_.empty(); }
    bool at_capacity() const { return max_size_ && size() >= *max_size_; }
    const std::vector<Eigen::VectorXd>& centers() const { return centers_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
    const KernelConfig& kernel_config() const { return cfg_; }
    std::optional<int> max_size() const { return max_size_; }

    double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// k̃(x): kernel of x against every node, length m.
    Eigen::VectorXd kvec(const Eigen::VectorXd& x) const;

    /// ALD projection residual delta1 and coefficient vector alpha.
    AldResult ald_test(const Eigen::VectorXd& x) const;

    /// Appends x as a node, extending gram and gram_inverse by the
    /// Schur-complement block inverse with pivot ald.delta1.
    /// Returns false (dictionary unchanged) when delta1 <= pivot_floor
    /// or the size cap is reached.
    bool ald_admit(const Eigen::VectorXd& x, const AldResult& ald,
                   double pivot_floor = 1e-12);

    /// Appends x unconditionally, rebuilding gram and inverse.
    void push_node(const Eigen::VectorXd& x);

    /// Nearest node index and squared Euclidean distance to it.
    std::pair<int, double> distance_test(const Eigen::VectorXd& x) const;

    /// Replaces the node with smallest |weights(i)| (ties: lowest index)
    /// by a node at x_new; returns the replaced index.
    int replace_node(const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& x_new);

    /// Swaps the kernel configuration and rebuilds gram and inverse;
    /// used after intermittent precision optimization.
    void set_kernel_config(KernelConfig cfg);

private:
    void rebuild_gram();

    KernelConfig cfg_;
    std::optional<int> max_size_;
    std::vector<Eigen::VectorXd> centers_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd gram_inverse_;
};

/// delta3 = 1/2 * da^T H da; H must be symmetric PSD.
double loss_change_test(const Eigen::VectorXd& delta_alpha,
                        const Eigen::MatrixXd& hessian);

struct OfsBudget {
    std::optional<int> max_terms;
    double min_err_ratio = 0.0;
};

/// Greedy orthogonal forward selection over the full regression matrix
/// K(i,j) = k(x_i, x_j), maximizing the error reduction ratio at each step.
OfsSelection ofs_select(const std::vector<Eigen::VectorXd>& candidates,
                        const Eigen::VectorXd& y, const KernelConfig& cfg,
                        const OfsBudget& budget);

}  // namespace okp
