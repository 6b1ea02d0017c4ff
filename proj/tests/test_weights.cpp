#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "okp/cmaes.hpp"
#include "okp/weights.hpp"

using okp::Dictionary;
using okp::KernelConfig;

namespace {

Eigen::VectorXd random_vec(int n, okp::NormalRng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

// Runs an ALD-KRLS stream and checks the recursion against the batch
// solution at every step. Returns the final dictionary size.
int check_krls_stream(int steps, int dim, double lambda, double nu1,
                      uint64_t seed, double tol) {
    okp::NormalRng rng(seed);
    Dictionary dict(KernelConfig::isotropic(dim), 10);
    auto state = okp::KrlsState::init(lambda);
    std::vector<Eigen::VectorXd> rows;  // ALD coefficient rows (batch A)
    std::vector<double> ys;

    for (int n = 0; n < steps; ++n) {
        const Eigen::VectorXd x = random_vec(dim, rng);
        const double y = std::sin(x.sum()) + 0.1 * rng.normal();
        bool admitted = false;
        okp::AldResult ald;
        if (dict.empty()) {
            dict.ald_admit(x, {});
            admitted = true;
        } else {
            ald = dict.ald_test(x);
            if (ald.delta1 > nu1 && dict.ald_admit(x, ald)) admitted = true;
        }
        okp::krls_step(state, dict, x, y, admitted, ald);
        ys.push_back(y);
        if (admitted) {
            for (auto& r : rows) {
                Eigen::VectorXd grown = Eigen::VectorXd::Zero(dict.size());
                grown.head(r.size()) = r;
                r = grown;
            }
            Eigen::VectorXd e = Eigen::VectorXd::Zero(dict.size());
            e(dict.size() - 1) = 1.0;
            rows.push_back(e);
        } else {
            rows.push_back(ald.alpha);
        }

        Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), dict.size());
        for (size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i];
        const Eigen::MatrixXd ak = a * dict.gram();
        Eigen::VectorXd batch;
        if (lambda == 0.0)
            batch = okp::batch_ls_oracle(ak, Eigen::Map<const Eigen::VectorXd>(
                                                 ys.data(),
                                                 static_cast<Eigen::Index>(
                                                     ys.size())),
                                         0.0);
        else
            batch = okp::batch_ls_oracle(
                ak,
                Eigen::Map<const Eigen::VectorXd>(
                    ys.data(), static_cast<Eigen::Index>(ys.size())),
                lambda);
        const auto alpha = okp::krls_solve(state, dict);
        REQUIRE((alpha - batch).cwiseAbs().maxCoeff() <= tol);
    }
    return dict.size();
}

}  // namespace

TEST_CASE("krls first sample closed form") {
    Dictionary dict(KernelConfig::isotropic(2));
    const double lambda = 0.25;
    auto state = okp::KrlsState::init(lambda);
    dict.ald_admit(Eigen::Vector2d(0.3, -0.1), {});
    okp::krls_step(state, dict, Eigen::Vector2d(0.3, -0.1), 2.0, true, {});
    const auto alpha = okp::krls_solve(state, dict);
    CHECK(alpha(0) == doctest::Approx(2.0 / (1.0 + lambda)).epsilon(1e-12));
}

TEST_CASE("krls matches the batch oracle at every step") {
    const int m = check_krls_stream(50, 2, 0.0, 0.05, 77, 1e-7);
    CHECK(m <= 10);
    CHECK(m >= 2);
}

TEST_CASE("krls with ridge matches the regularized batch oracle") {
    check_krls_stream(40, 3, 1e-4, 0.05, 79, 1e-6);
}

TEST_CASE("krls repeated-sample stream converges to y") {
    Dictionary dict(KernelConfig::isotropic(2));
    auto state = okp::KrlsState::init(0.0);
    const Eigen::Vector2d x(1.0, -0.5);
    dict.ald_admit(x, {});
    okp::krls_step(state, dict, x, 3.0, true, {});
    for (int n = 0; n < 20; ++n) {
        const auto ald = dict.ald_test(x);
        okp::krls_step(state, dict, x, 3.0, false, ald);
    }
    const auto alpha = okp::krls_solve(state, dict);
    CHECK(alpha(0) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("mrls p=1 beta=1 equals classical RLS") {
    okp::NormalRng rng(83);
    const int m = 4;
    auto state = okp::MrlsState::init(m, 1.0, 1, 1e-3);

    // Classical RLS trace with the same initialization.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd p_mat = 1e3 * Eigen::MatrixXd::Identity(m, m);

    for (int n = 0; n < 200; ++n) {
        Eigen::VectorXd k = random_vec(m, rng).cwiseAbs();
        const double y = std::cos(k.sum()) + 0.05 * rng.normal();
        okp::mrls_step(state, k, y);

        const double denom = 1.0 + k.dot(p_mat * k);
        const Eigen::VectorXd gain = p_mat * k / denom;
        theta += gain * (y - k.dot(theta));
        p_mat -= gain * (k.transpose() * p_mat);
        p_mat = ((p_mat + p_mat.transpose()) / 2.0).eval();

        CHECK((state.alpha - theta).cwiseAbs().maxCoeff() <= 1e-9);
        // P stays symmetric PD.
        CHECK((state.P - state.P.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.P);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("mrls zero error leaves alpha unchanged") {
    auto state = okp::MrlsState::init(2, 1.0, 1, 1e-3);
    Eigen::VectorXd k(2);
    k << 0.5, 0.3;
    okp::mrls_step(state, k, 1.0);
    const Eigen::VectorXd alpha_before = state.alpha;
    // Feed the model's own prediction: zero innovation.
    okp::mrls_step(state, k, state.alpha.dot(k));
    CHECK((state.alpha - alpha_before).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mrls multi-innovation window stays symmetric") {
    okp::NormalRng rng(89);
    auto state = okp::MrlsState::init(3, 0.9, 2, 1e-3);
    for (int n = 0; n < 200; ++n) {
        const Eigen::VectorXd k = random_vec(3, rng);
        okp::mrls_step(state, k, rng.normal());
        CHECK((state.P - state.P.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("mrls and krls agree on a stationary fixed-dictionary stream") {
    okp::NormalRng rng(97);
    Dictionary dict(KernelConfig::isotropic(2));
    dict.push_node(Eigen::Vector2d(0, 0));
    dict.push_node(Eigen::Vector2d(1, 1));
    dict.push_node(Eigen::Vector2d(-1, 0.5));
    const int m = dict.size();

    auto mrls = okp::MrlsState::init(m, 1.0, 1, 1e-6);
    auto krls = okp::KrlsState::init(0.0);
    // Fixed-dictionary KRLS needs identity-free bookkeeping: feed every
    // sample as a non-admitted one over a pre-seeded state.
    krls.alpha = Eigen::VectorXd::Zero(m);
    krls.ata = Eigen::MatrixXd::Zero(m, m);
    krls.ata_inverse = 1e12 * Eigen::MatrixXd::Identity(m, m);
    krls.aty = Eigen::VectorXd::Zero(m);

    Eigen::VectorXd true_alpha(3);
    true_alpha << 0.8, -0.4, 0.3;
    for (int n = 0; n < 500; ++n) {
        const Eigen::VectorXd x = random_vec(2, rng);
        const Eigen::VectorXd k = dict.kvec(x);
        const double y = true_alpha.dot(k);
        okp::mrls_step(mrls, k, y);
        okp::AldResult ald = dict.ald_test(x);
        okp::krls_step(krls, dict, x, y, false, ald);
    }
    const auto krls_alpha = okp::krls_solve(krls, dict);
    CHECK((mrls.alpha - krls_alpha).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("recurrent gradient step closed forms") {
    okp::NormalRng rng(101);
    Dictionary dict(KernelConfig::isotropic(2));
    dict.push_node(Eigen::Vector2d(0, 0));
    dict.push_node(Eigen::Vector2d(1, 0));

    SUBCASE("zero error leaves the state unchanged") {
        auto state = okp::RecurrentGradState::init(2, 0.01, 0.0);
        const Eigen::Vector2d x(0.2, 0.1);
        const Eigen::VectorXd k = dict.kvec(x);
        state.alpha << 0.5, -0.5;
        const double y = state.alpha.dot(k);
        const Eigen::VectorXd before = state.alpha;
        okp::recurrent_grad_step(state, dict, x, y);
        CHECK((state.alpha - before).cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("lambda=0 is a plain kernel LMS step") {
        auto state = okp::RecurrentGradState::init(2, 0.01, 0.0);
        const Eigen::Vector2d x(0.4, -0.2);
        const Eigen::VectorXd k = dict.kvec(x);
        const double y = 1.5;
        const double e = y - state.alpha.dot(k);
        okp::recurrent_grad_step(state, dict, x, y);
        CHECK((state.alpha - 2.0 * 0.01 * e * k).cwiseAbs().maxCoeff() <
              1e-14);
    }
}

TEST_CASE("recurrent gradient matches finite differences when lambda=0") {
    okp::NormalRng rng(103);
    Dictionary dict(KernelConfig::isotropic(3));
    for (int i = 0; i < 4; ++i) dict.push_node(random_vec(3, rng));
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = random_vec(3, rng);
        const Eigen::VectorXd alpha0 = random_vec(4, rng);
        const double y = rng.normal();
        const double eta = 1e-3;

        auto state = okp::RecurrentGradState::init(4, eta, 0.0);
        state.alpha = alpha0;
        okp::recurrent_grad_step(state, dict, x, y);
        const Eigen::VectorXd grad = (alpha0 - state.alpha) / eta;

        const auto sq_err = [&](const Eigen::VectorXd& a) {
            const double e = y - a.dot(dict.kvec(x));
            return e * e;
        };
        for (int j = 0; j < 4; ++j) {
            Eigen::VectorXd hi = alpha0, lo = alpha0;
            hi(j) += 1e-6;
            lo(j) -= 1e-6;
            const double fd = (sq_err(hi) - sq_err(lo)) / 2e-6;
            CHECK(grad(j) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("recurrent gradient descends for small learning rates") {
    okp::NormalRng rng(107);
    Dictionary dict(KernelConfig::isotropic(2));
    dict.push_node(Eigen::Vector2d(0, 0));
    dict.push_node(Eigen::Vector2d(0.5, 0.5));
    const Eigen::Vector2d x(0.3, -0.3);
    const double y = 2.0;
    for (double eta : {1e-4, 1e-3}) {
        auto state = okp::RecurrentGradState::init(2, eta, 0.01, {0});
        state.alpha = random_vec(2, rng);
        const Eigen::VectorXd k = dict.kvec(x);
        const double e_before = y - state.alpha.dot(k);
        okp::recurrent_grad_step(state, dict, x, y);
        const double e_after = y - state.alpha.dot(k);
        CHECK(e_after * e_after < e_before * e_before);
    }
}

TEST_CASE("linear RLS learns a constant") {
    auto state = okp::LinearRlsState::init(1, 1.0);
    Eigen::VectorXd one(1);
    one << 1.0;
    for (int n = 0; n < 100; ++n) okp::linear_rls_step(state, one, 4.2);
    // Initial P = delta^{-1} I leaves a ~4e-5 ridge bias after 100 steps.
    CHECK(state.theta(0) == doctest::Approx(4.2).epsilon(1e-4));
}

TEST_CASE("linear RLS with beta2=1 matches batch weighted LS") {
    okp::NormalRng rng(109);
    auto state = okp::LinearRlsState::init(3, 1.0, 1e-9);
    Eigen::MatrixXd a(40, 3);
    Eigen::VectorXd y(40);
    Eigen::VectorXd truth(3);
    truth << 1.0, -2.0, 0.5;
    for (int n = 0; n < 40; ++n) {
        const Eigen::VectorXd x = random_vec(3, rng);
        a.row(n) = x;
        y(n) = truth.dot(x) + 0.01 * rng.normal();
        okp::linear_rls_step(state, x, y(n));
    }
    const Eigen::VectorXd batch = okp::batch_ls_oracle(a, y, 0.0);
    CHECK((state.theta - batch).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("linear RLS zero input only rescales P") {
    auto state = okp::LinearRlsState::init(2, 0.5);
    Eigen::VectorXd x(2);
    x << 1.0, -1.0;
    okp::linear_rls_step(state, x, 1.0);
    const Eigen::VectorXd theta_before = state.theta;
    const Eigen::MatrixXd p_before = state.P;
    okp::linear_rls_step(state, Eigen::VectorXd::Zero(2), 7.0);
    CHECK((state.theta - theta_before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.P - p_before / 0.5).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear RLS P stays symmetric positive definite") {
    okp::NormalRng rng(113);
    auto state = okp::LinearRlsState::init(3, 0.98);
    for (int n = 0; n < 1000; ++n) {
        okp::linear_rls_step(state, random_vec(3, rng), rng.normal());
        CHECK((state.P - state.P.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.P);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("batch_ls_oracle closed forms") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1, -1, 2;
    SUBCASE("identity design") {
        const double lambda = 0.3;
        const Eigen::VectorXd w = okp::batch_ls_oracle(eye, y, lambda);
        CHECK((w - y / (1.0 + lambda)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("orthogonal target gives zero") {
        Eigen::MatrixXd a(3, 1);
        a << 1, 0, 0;
        Eigen::VectorXd y_perp(3);
        y_perp << 0, 1, 1;
        const Eigen::VectorXd w = okp::batch_ls_oracle(a, y_perp, 0.0);
        CHECK(std::abs(w(0)) < 1e-12);
    }
    SUBCASE("rank deficiency without ridge is rejected") {
        Eigen::MatrixXd a(3, 2);
        a << 1, 1, 2, 2, 3, 3;
        CHECK_THROWS_AS(okp::batch_ls_oracle(a, y, 0.0), std::domain_error);
    }
}

TEST_CASE("batch_ls_oracle satisfies the optimality condition") {
    okp::NormalRng rng(127);
    Eigen::MatrixXd a(10, 4);
    for (int i = 0; i < 10; ++i) a.row(i) = random_vec(4, rng);
    const Eigen::VectorXd y = random_vec(10, rng);
    const double lambda = 0.05;
    const Eigen::VectorXd w = okp::batch_ls_oracle(a, y, lambda);
    const Eigen::VectorXd grad = a.transpose() * (a * w - y) + lambda * w;
    CHECK(grad.norm() <= 1e-9);
}
