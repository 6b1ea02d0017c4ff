#include "okp/cmaes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace okp {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

NormalRng::NormalRng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

uint64_t NormalRng::next_raw() {
    // xoshiro256++
    const uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double NormalRng::uniform() {
    const double u = static_cast<double>(next_raw() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

double NormalRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

uint64_t NormalRng::next_seed() { return next_raw(); }

CmaesParams CmaesParams::defaults(int n) {
    if (n < 1) throw std::invalid_argument("cmaes dimension must be >= 1");
    CmaesParams p;
    p.dim = n;
    p.lambda_c = 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    p.mu_c = p.lambda_c / 2;
    p.w_m.resize(p.mu_c);
    for (int i = 0; i < p.mu_c; ++i)
        p.w_m(i) = std::log(p.mu_c + 0.5) - std::log(i + 1.0);
    p.w_m /= p.w_m.sum();
    p.mu_eff = 1.0 / p.w_m.squaredNorm();
    p.c_m = 1.0;
    p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
    p.c_mu = std::min(1.0 - p.c_1,
                      2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) /
                          ((n + 2.0) * (n + 2.0) + p.mu_eff));
    p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
    p.d_sigma = 1.0 + p.c_sigma +
                2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0);
    p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
    p.chi_n = std::sqrt(static_cast<double>(n)) *
              (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    return p;
}

CmaesState CmaesState::init(const Eigen::VectorXd& x0, double sigma0) {
    if (sigma0 <= 0.0) throw std::invalid_argument("sigma0 must be > 0");
    CmaesState s;
    s.mean = x0;
    s.sigma = sigma0;
    s.C = Eigen::MatrixXd::Identity(x0.size(), x0.size());
    s.p_c1 = Eigen::VectorXd::Zero(x0.size());
    s.p_sigma = Eigen::VectorXd::Zero(x0.size());
    return s;
}

std::vector<Eigen::VectorXd> sample_population(const CmaesState& state,
                                               const CmaesParams& params,
                                               NormalRng& rng) {
    const Eigen::Index n = state.mean.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.C);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("cmaes covariance eigendecomposition failed");
    const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::vector<Eigen::VectorXd> pop;
    pop.reserve(static_cast<size_t>(params.lambda_c));
    for (int k = 0; k < params.lambda_c; ++k) {
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
        pop.push_back(state.mean +
                      state.sigma * (es.eigenvectors() * d.cwiseProduct(z)));
    }
    return pop;
}

std::vector<int> rank_and_select(const std::vector<double>& values) {
    std::vector<int> idx(values.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    bool any_finite = false;
    for (double v : values) any_finite |= std::isfinite(v);
    if (!any_finite)
        throw std::runtime_error("cmaes: objective non-finite on whole population");
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double fa = values[static_cast<size_t>(a)];
        const double fb = values[static_cast<size_t>(b)];
        const bool ga = std::isfinite(fa);
        const bool gb = std::isfinite(fb);
        if (ga != gb) return ga;
        return ga && fa < fb;
    });
    return idx;
}

Eigen::VectorXd update_mean(const CmaesState& state,
                            const std::vector<Eigen::VectorXd>& population,
                            const std::vector<int>& order,
                            const CmaesParams& params) {
    Eigen::VectorXd step = Eigen::VectorXd::Zero(state.mean.size());
    for (int i = 0; i < params.mu_c; ++i)
        step += params.w_m(i) *
                (population[static_cast<size_t>(order[static_cast<size_t>(i)])] -
                 state.mean);
    return state.mean + params.c_m * step;
}

Eigen::MatrixXd update_covariance(const CmaesState& state,
                                  const std::vector<Eigen::VectorXd>& population,
                                  const std::vector<int>& order,
                                  const CmaesParams& params) {
    const double wsum = params.w_m.sum();  // = 1 for default weights
    Eigen::MatrixXd c =
        (1.0 - params.c_1 - params.c_mu * wsum) * state.C;
    c.noalias() += params.c_1 * state.p_c1 * state.p_c1.transpose();
    for (int i = 0; i < params.mu_c; ++i) {
        const Eigen::VectorXd y =
            (population[static_cast<size_t>(order[static_cast<size_t>(i)])] -
             state.mean) /
            state.sigma;
        c.noalias() += params.c_mu * params.w_m(i) * y * y.transpose();
    }
    return 0.5 * (c + c.transpose());
}

double update_step_size(const CmaesState& state, const CmaesParams& params) {
    return state.sigma *
           std::exp((params.c_sigma / params.d_sigma) *
                    (state.p_sigma.norm() / params.chi_n - 1.0));
}

std::vector<int> cmaes_generation(CmaesState& state, const CmaesParams& params,
                                  NormalRng& rng,
                                  const std::function<double(const Eigen::VectorXd&)>& objective,
                                  CmaesResult& result) {
    const auto population = sample_population(state, params, rng);
    std::vector<double> values;
    values.reserve(population.size());
    for (const auto& x : population) {
        double f;
        try {
            f = objective(x);
        } catch (const std::exception&) {
            f = std::numeric_limits<double>::infinity();
        }
        values.push_back(f);
        ++result.evaluations;
    }
    const auto order = rank_and_select(values);
    const double gen_best = values[static_cast<size_t>(order[0])];
    if (result.history.empty() || gen_best < result.best_f) {
        result.best_f = gen_best;
        result.best_x = population[static_cast<size_t>(order[0])];
    }
    result.history.push_back(gen_best);

    const Eigen::VectorXd mean_next = update_mean(state, population, order, params);
    const Eigen::VectorXd delta = (mean_next - state.mean) / state.sigma;

    // C^{-1/2} delta for the conjugate step-size path.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.C);
    const Eigen::VectorXd dinv =
        es.eigenvalues().cwiseMax(1e-30).cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd cinv_half_delta =
        es.eigenvectors() *
        dinv.cwiseProduct(es.eigenvectors().transpose() * delta);

    state.p_sigma = (1.0 - params.c_sigma) * state.p_sigma +
                    std::sqrt(params.c_sigma * (2.0 - params.c_sigma) *
                              params.mu_eff) *
                        cinv_half_delta;
    const double decay =
        1.0 - std::pow(1.0 - params.c_sigma, 2.0 * (state.generation + 1));
    const bool hsig =
        state.p_sigma.norm() / std::sqrt(decay) <
        (1.4 + 2.0 / (params.dim + 1.0)) * params.chi_n;
    state.p_c1 = (1.0 - params.c_c) * state.p_c1 +
                 (hsig ? 1.0 : 0.0) *
                     std::sqrt(params.c_c * (2.0 - params.c_c) * params.mu_eff) *
                     delta;

    state.C = update_covariance(state, population, order, params);
    const double sigma_next = update_step_size(state, params);
    state.mean = mean_next;
    state.sigma = sigma_next;
    ++state.generation;
    return order;
}

CmaesResult optimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                     const Eigen::VectorXd& x0, double sigma0,
                     const CmaesParams& params,
                     const CmaesTermination& termination, uint64_t seed) {
    CmaesState state = CmaesState::init(x0, sigma0);
    NormalRng rng(seed);
    CmaesResult result;
    result.best_f = std::numeric_limits<double>::infinity();
    int stall = 0;
    double stall_ref = std::numeric_limits<double>::infinity();
    while (result.evaluations < termination.max_evaluations &&
           state.generation < termination.max_generations) {
        cmaes_generation(state, params, rng, objective, result);
        if (result.best_f <= termination.f_target) break;
        if (state.sigma <= termination.sigma_floor) break;
        if (termination.rel_tol > 0.0 && termination.stall_generations > 0) {
            const double improvement =
                (stall_ref - result.best_f) /
                std::max(std::abs(stall_ref), 1e-300);
            if (std::isfinite(stall_ref) && improvement < termination.rel_tol) {
                if (++stall >= termination.stall_generations) break;
            } else {
                stall = 0;
            }
            stall_ref = result.best_f;
        }
    }
    return result;
}

}  // namespace okp
