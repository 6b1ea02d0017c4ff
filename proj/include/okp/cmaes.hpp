// Pure CMA-ES: sampling, selection, weighted recombination, covariance
// adaptation (rank-one + rank-mu) and cumulative step-size control.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace okp {

// Deterministic normal generator (xorshift-mixed mt19937_64 + Box-Muller);
// identical streams for identical seeds regardless of platform libc.
class NormalRng {
public:
    explicit NormalRng(uint64_t seed);
    double uniform();  // in (0, 1)
    double normal();
    uint64_t next_seed();  // derive an independent child seed

private:
    uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
    uint64_t next_raw();
};

struct CmaesParams {
    int dim = 0;
    int lambda_c = 0;
    int mu_c = 0;
    Eigen::VectorXd w_m;  // recombination weights, length mu_c, sum 1
    double mu_eff = 0.0;
    double c_m = 1.0;
    double c_1 = 0.0;
    double c_mu = 0.0;
    double c_sigma = 0.0;
    double d_sigma = 1.0;
    double c_c = 0.0;
    double chi_n = 0.0;  // expected norm of N(0, I_n)

    static CmaesParams defaults(int n);
};

struct CmaesState {
    Eigen::VectorXd mean;
    double sigma = 1.0;
    Eigen::MatrixXd C;
    Eigen::VectorXd p_c1;
    Eigen::VectorXd p_sigma;
    int generation = 0;

    static CmaesState init(const Eigen::VectorXd& x0, double sigma0);
};

std::vector<Eigen::VectorXd> sample_population(const CmaesState& state,
                                               const CmaesParams& params,
                                               NormalRng& rng);

/// Ascending-objective order (minimization); non-finite values rank last;
/// stable tie-break by sample index. Throws if all values are non-finite.
std::vector<int> rank_and_select(const std::vector<double>& values);

Eigen::VectorXd update_mean(const CmaesState& state,
                            const std::vector<Eigen::VectorXd>& population,
                            const std::vector<int>& order,
                            const CmaesParams& params);

/// Uses state.p_c1 as the already-updated rank-one evolution path.
Eigen::MatrixXd update_covariance(const CmaesState& state,
                                  const std::vector<Eigen::VectorXd>& population,
                                  const std::vector<int>& order,
                                  const CmaesParams& params);

/// Uses state.p_sigma as the already-updated step-size path.
double update_step_size(const CmaesState& state, const CmaesParams& params);

struct CmaesTermination {
    int max_evaluations = 10000;
    int max_generations = 1 << 30;
    double f_target = -1e300;
    double sigma_floor = 0.0;
    // Stop when the best f improves by less than rel_tol (relative) over
    // stall_generations consecutive generations; disabled when <= 0.
    double rel_tol = 0.0;
    int stall_generations = 0;
};

struct CmaesResult {
    Eigen::VectorXd best_x;
    double best_f = 0.0;
    std::vector<double> history;  // per-generation best objective
    int evaluations = 0;
};

/// One full generation: sample, evaluate, select, recombine.
/// Returns the index order of this generation's population.
std::vector<int> cmaes_generation(CmaesState& state, const CmaesParams& params,
                                  NormalRng& rng,
                                  const std::function<double(const Eigen::VectorXd&)>& objective,
                                  CmaesResult& result);

CmaesResult optimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                     const Eigen::VectorXd& x0, double sigma0,
                     const CmaesParams& params,
                     const CmaesTermination& termination, uint64_t seed);

}  // namespace okp
