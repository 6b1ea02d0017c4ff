#include "okp/dictionary.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace okp {

Dictionary::Dictionary(KernelConfig cfg, std::optional<int> max_size)
    : cfg_(std::move(cfg)), max_size_(max_size) {
    if (max_size_ && *max_size_ < 1)
        throw std::invalid_argument("dictionary max_size must be >= 1");
    gram_.resize(0, 0);
    gram_inverse_.resize(0, 0);
}

double Dictionary::kernel(const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b) const {
    KernelNode node{a, cfg_.precision, cfg_.h0};
    return eval_kernel(node, b);
}

Eigen::VectorXd Dictionary::kvec(const Eigen::VectorXd& x) const {
    Eigen::VectorXd k(size());
    for (int i = 0; i < size(); ++i) k(i) = kernel(centers_[i], x);
    return k;
}

AldResult Dictionary::ald_test(const Eigen::VectorXd& x) const {
    if (empty())
        throw std::invalid_argument("ald_test on empty dictionary; admit the first sample directly");
    AldResult res;
    const Eigen::VectorXd k = kvec(x);
    res.alpha = gram_inverse_ * k;
    res.delta1 = 1.0 - k.dot(res.alpha);  // self-kernel is 1
    return res;
}

bool Dictionary::ald_admit(const Eigen::VectorXd& x, const AldResult& ald,
                           double pivot_floor) {
    if (at_capacity()) return false;
    if (empty()) {
        centers_.push_back(x);
        gram_ = Eigen::MatrixXd::Ones(1, 1);
        gram_inverse_ = Eigen::MatrixXd::Ones(1, 1);
        return true;
    }
    if (ald.delta1 <= pivot_floor) return false;  // numerically dependent
    const int m = size();
    const Eigen::VectorXd k = kvec(x);
    const Eigen::VectorXd& a = ald.alpha;
    const double s = ald.delta1;  // Schur pivot

    Eigen::MatrixXd g(m + 1, m + 1);
    g.topLeftCorner(m, m) = gram_;
    g.topRightCorner(m, 1) = k;
    g.bottomLeftCorner(1, m) = k.transpose();
    g(m, m) = 1.0;

    Eigen::MatrixXd gi(m + 1, m + 1);
    gi.topLeftCorner(m, m) = gram_inverse_ + a * a.transpose() / s;
    gi.topRightCorner(m, 1) = -a / s;
    gi.bottomLeftCorner(1, m) = -a.transpose() / s;
    gi(m, m) = 1.0 / s;

    centers_.push_back(x);
    gram_ = std::move(g);
    gram_inverse_ = 0.5 * (gi + gi.transpose());
    return true;
}

void Dictionary::push_node(const Eigen::VectorXd& x) {
    centers_.push_back(x);
    rebuild_gram();
}

std::pair<int, double> Dictionary::distance_test(
    const Eigen::VectorXd& x) const {
    if (empty()) throw std::invalid_argument("distance_test on empty dictionary");
    int j_star = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < size(); ++j) {
        const double d = (x - centers_[j]).squaredNorm();
        if (d < best) {
            best = d;
            j_star = j;
        }
    }
    return {j_star, best};
}

int Dictionary::replace_node(const Eigen::VectorXd& weights,
                             const Eigen::VectorXd& x_new) {
    if (weights.size() != size())
        throw std::invalid_argument("replace_node weights length mismatch");
    int idx = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
        const double score = std::abs(weights(i));
        if (score < best) {
            best = score;
            idx = i;
        }
    }
    centers_[idx] = x_new;
    rebuild_gram();
    return idx;
}

void Dictionary::set_kernel_config(KernelConfig cfg) {
    cfg_ = std::move(cfg);
    rebuild_gram();
}

void Dictionary::rebuild_gram() {
    const int m = size();
    gram_.resize(m, m);
    for (int i = 0; i < m; ++i) {
        gram_(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double k = kernel(centers_[i], centers_[j]);
            gram_(i, j) = k;
            gram_(j, i) = k;
        }
    }
    if (m == 0) {
        gram_inverse_.resize(0, 0);
        return;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("gram matrix factorization failed");
    gram_inverse_ = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
    gram_inverse_ = 0.5 * (gram_inverse_ + gram_inverse_.transpose()).eval();
}

double loss_change_test(const Eigen::VectorXd& delta_alpha,
                        const Eigen::MatrixXd& hessian) {
    if (hessian.rows() != delta_alpha.size() ||
        hessian.cols() != delta_alpha.size())
        throw std::invalid_argument("loss_change_test dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian);
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw std::domain_error("loss_change_test hessian not PSD");
    return 0.5 * delta_alpha.dot(hessian * delta_alpha);
}

OfsSelection ofs_select(const std::vector<Eigen::VectorXd>& candidates,
                        const Eigen::VectorXd& y, const KernelConfig& cfg,
                        const OfsBudget& budget) {
    const int n = static_cast<int>(candidates.size());
    if (n < 1 || y.size() != n)
        throw std::invalid_argument("ofs_select needs |candidates| == |y| >= 1");
    const double yty = y.squaredNorm();
    if (yty <= 0.0) throw std::invalid_argument("ofs_select needs ||y|| > 0");

    Eigen::MatrixXd kmat(n, n);
    for (int i = 0; i < n; ++i) {
        KernelNode node{candidates[static_cast<size_t>(i)], cfg.precision, cfg.h0};
        for (int j = 0; j < n; ++j)
            kmat(i, j) = eval_kernel(node, candidates[static_cast<size_t>(j)]);
    }

    const int cap = budget.max_terms ? std::min(*budget.max_terms, n) : n;
    OfsSelection sel;
    std::vector<bool> used(static_cast<size_t>(n), false);
    std::vector<double> gs;
    std::vector<Eigen::VectorXd> a_cols;

    while (static_cast<int>(sel.selected_indices.size()) < cap) {
        int best_j = -1;
        double best_err = -1.0;
        Eigen::VectorXd best_w, best_a;
        double best_g = 0.0;
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            Eigen::VectorXd w = kmat.col(j);
            Eigen::VectorXd a(sel.orthogonal_basis.size());
            for (size_t s = 0; s < sel.orthogonal_basis.size(); ++s) {
                const Eigen::VectorXd& ws = sel.orthogonal_basis[s];
                a(static_cast<Eigen::Index>(s)) =
                    ws.dot(kmat.col(j)) / ws.squaredNorm();
                w -= a(static_cast<Eigen::Index>(s)) * ws;
            }
            const double wtw = w.squaredNorm();
            if (wtw < 1e-12) continue;  // dependent column
            const double g = w.dot(y) / wtw;
            const double err = g * g * wtw / yty;
            if (err > best_err) {  // ties keep the lowest index
                best_err = err;
                best_j = j;
                best_w = w;
                best_a = a;
                best_g = g;
            }
        }
        if (best_j < 0 || best_err < budget.min_err_ratio) break;
        used[static_cast<size_t>(best_j)] = true;
        sel.selected_indices.push_back(best_j);
        sel.err_ratios.push_back(best_err);
        sel.orthogonal_basis.push_back(best_w);
        gs.push_back(best_g);
        a_cols.push_back(best_a);
    }

    const int m = static_cast<int>(sel.selected_indices.size());
    sel.g.resize(m);
    sel.A_upper = Eigen::MatrixXd::Identity(m, m);
    for (int c = 0; c < m; ++c) {
        sel.g(c) = gs[static_cast<size_t>(c)];
        for (int r = 0; r < c; ++r)
            sel.A_upper(r, c) = a_cols[static_cast<size_t>(c)](r);
    }
    return sel;
}

}  // namespace okp
