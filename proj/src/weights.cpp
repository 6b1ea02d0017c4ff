#include "okp/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace okp {

KrlsState KrlsState::init(double lambda) {
    KrlsState s;
    s.lambda = lambda;
    s.alpha.resize(0);
    s.ata.resize(0, 0);
    s.ata_inverse.resize(0, 0);
    s.aty.resize(0);
    return s;
}

Eigen::VectorXd krls_solve(const KrlsState& s, const Dictionary& dict) {
    const int m = dict.size();
    if (s.lambda == 0.0) {
        // Exact least-squares solution: alpha = K^-1 (A^T A)^-1 A^T y.
        return dict.gram_inverse() * (s.ata_inverse * s.aty);
    }
    const Eigen::MatrixXd& k = dict.gram();
    Eigen::MatrixXd lhs = k * s.ata * k;
    lhs += s.lambda * Eigen::MatrixXd::Identity(m, m);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        return lhs.completeOrthogonalDecomposition().solve(k * s.aty);
    return ldlt.solve(k * s.aty);
}

void krls_step(KrlsState& state, const Dictionary& dict,
               const Eigen::VectorXd& x, double y, bool admitted,
               const AldResult& ald) {
    (void)x;
    const int m = dict.size();
    if (admitted) {
        if (m != state.aty.size() + 1)
            throw std::invalid_argument("krls_step: dictionary/state size mismatch");
        Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(m, m);
        ata.topLeftCorner(m - 1, m - 1) = state.ata;
        ata(m - 1, m - 1) = 1.0;  // the admitted sample's row is e_m
        Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(m, m);
        inv.topLeftCorner(m - 1, m - 1) = state.ata_inverse;
        inv(m - 1, m - 1) = 1.0;
        Eigen::VectorXd aty = Eigen::VectorXd::Zero(m);
        aty.head(m - 1) = state.aty;
        aty(m - 1) = y;
        state.ata = std::move(ata);
        state.ata_inverse = std::move(inv);
        state.aty = std::move(aty);
    } else {
        if (m != state.aty.size())
            throw std::invalid_argument("krls_step: dictionary/state size mismatch");
        const Eigen::VectorXd& a = ald.alpha;
        state.ata.noalias() += a * a.transpose();
        const Eigen::VectorXd v = state.ata_inverse * a;
        state.ata_inverse.noalias() -= v * v.transpose() / (1.0 + a.dot(v));
        state.aty.noalias() += y * a;
    }
    state.alpha = krls_solve(state, dict);
}

MrlsState MrlsState::init(int m, double beta, int p, double delta) {
    if (p < 1) throw std::invalid_argument("mrls window length must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("mrls forgetting factor must be in (0,1]");
    MrlsState s;
    s.alpha = Eigen::VectorXd::Zero(m);
    s.P = Eigen::MatrixXd::Identity(m, m) / delta;
    s.beta = beta;
    s.p = p;
    return s;
}

double mrls_step(MrlsState& state, const Eigen::VectorXd& kvec, double y) {
    if (kvec.size() != state.alpha.size())
        throw std::invalid_argument("mrls_step kernel vector size mismatch");
    const int m = static_cast<int>(state.alpha.size());
    std::deque<std::pair<Eigen::VectorXd, double>> window = state.window;
    window.emplace_back(kvec, y);
    while (static_cast<int>(window.size()) > state.p) window.pop_front();

    const int w = static_cast<int>(window.size());
    Eigen::MatrixXd kp(w, m);
    Eigen::VectorXd ep(w);
    for (int i = 0; i < w; ++i) {
        kp.row(i) = window[static_cast<size_t>(i)].first.transpose();
        ep(i) = window[static_cast<size_t>(i)].second -
                kp.row(i).dot(state.alpha);
    }
    Eigen::MatrixXd s =
        state.beta * Eigen::MatrixXd::Identity(w, w) + kp * state.P * kp.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::runtime_error("mrls_step: singular innovation matrix");
    const Eigen::MatrixXd psi = state.P * kp.transpose() * ldlt.solve(
        Eigen::MatrixXd::Identity(w, w));

    const double err = ep(w - 1);
    state.P = (state.P - psi * kp * state.P) / state.beta;
    state.P = 0.5 * (state.P + state.P.transpose()).eval();
    state.alpha += psi * ep;
    state.window = std::move(window);
    return err;
}

RecurrentGradState RecurrentGradState::init(int m, double eta,
                                            double lambda_scale,
                                            std::vector<int> feedback_lags) {
    if (eta <= 0.0) throw std::invalid_argument("learning rate must be > 0");
    RecurrentGradState s;
    s.alpha = Eigen::VectorXd::Zero(m);
    s.eta = eta;
    s.lambda_rec = lambda_scale * Eigen::MatrixXd::Identity(m, m);
    s.feedback_lags = std::move(feedback_lags);
    return s;
}

void recurrent_grad_step(RecurrentGradState& state, const Dictionary& dict,
                         const Eigen::VectorXd& x, double y) {
    for (int l : state.feedback_lags)
        if (l < 0 || l >= x.size())
            throw std::invalid_argument("invalid feedback lag index");
    const Eigen::VectorXd kvec = dict.kvec(x);
    const double e = y - kvec.dot(state.alpha);
    Eigen::VectorXd grad = -2.0 * e * kvec;

    // Recurrent term: fed-back components of x are past predictions,
    // differentiated through one-step memory.
    if (!state.feedback_lags.empty() && state.prev_kvec.size() == kvec.size() &&
        state.lambda_rec.norm() > 0.0) {
        Eigen::VectorXd s(dict.size());
        const double h0 = dict.kernel_config().h0;
        for (int i = 0; i < dict.size(); ++i) {
            const Eigen::VectorXd d = x - dict.centers()[static_cast<size_t>(i)];
            const Eigen::VectorXd dk =
                kvec(i) * (-2.0 / h0) * (dict.kernel_config().precision * d);
            double si = 0.0;
            for (int l : state.feedback_lags) si += dk(l);
            s(i) = si;
        }
        // (d e^2 / d k) (d k / d alpha^T) Lambda, with
        // d k_i / d alpha^T = s_i * prev_kvec^T.
        grad += -2.0 * e * state.alpha.dot(s) *
                (state.lambda_rec.transpose() * state.prev_kvec);
    }
    state.alpha -= state.eta * grad;
    state.prev_kvec = kvec;
}

LinearRlsState LinearRlsState::init(int p_r, double beta2, double delta) {
    LinearRlsState s;
    s.theta = Eigen::VectorXd::Zero(p_r);
    s.P = Eigen::MatrixXd::Identity(p_r, p_r) / delta;
    s.beta2 = beta2;
    return s;
}

double linear_rls_step(LinearRlsState& state, const Eigen::VectorXd& x,
                       double y) {
    if (x.size() != state.theta.size())
        throw std::invalid_argument("linear_rls_step input size mismatch");
    const double e = y - state.theta.dot(x);
    const Eigen::VectorXd px = state.P * x;
    const double denom = state.beta2 + x.dot(px);
    const Eigen::VectorXd gain = px / denom;
    state.theta += gain * e;
    state.P = (state.P - gain * px.transpose()) / state.beta2;
    state.P = 0.5 * (state.P + state.P.transpose()).eval();
    return e;
}

Eigen::VectorXd batch_ls_oracle(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& y, double lambda) {
    if (A.rows() != y.size())
        throw std::invalid_argument("batch_ls_oracle dimension mismatch");
    if (lambda > 0.0) {
        Eigen::MatrixXd lhs = A.transpose() * A;
        lhs += lambda * Eigen::MatrixXd::Identity(A.cols(), A.cols());
        return Eigen::LDLT<Eigen::MatrixXd>(lhs).solve(A.transpose() * y);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.cols())
        throw std::domain_error("batch_ls_oracle: rank-deficient with lambda = 0");
    return qr.solve(y);
}

}  // namespace okp
