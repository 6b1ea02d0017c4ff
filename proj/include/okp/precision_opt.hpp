// Intermittent optimization of the kernel precision matrix: a CMA-ES
// search over the rank-one target vector, scored by replaying the online
// pipeline over a selected sample set.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "okp/cmaes.hpp"
#include "okp/dictionary.hpp"
#include "okp/topology.hpp"

namespace okp {

// The pipeline a candidate precision is scored on.
struct PipelineConfig {
    SparsifierKind sparsifier = SparsifierKind::Ald;
    UpdaterKind updater = UpdaterKind::Krls;
    double nu1 = 0.01;
    double nu2 = 0.1;
    std::optional<int> max_size;
    double lambda = 1e-6;
    double beta = 1.0;
    int p = 1;
    double h0 = 1.0;
    int sign = +1;       // sign of the rank-one update
    double c0 = 0.0;     // 0 => default 2 / p_x^2
};

struct PrecisionOptStats {
    int dictionary_selections = 0;  // selection-procedure invocations
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// Weighted prequential squared-error loss of the pipeline rebuilt with
// `precision` over the evaluation set. When `fixed_centers` is non-null the
// dictionary is taken as given and only weight updating runs; otherwise the
// configured selection criterion runs too (counted via `selection_counter`).
double replay_pipeline_loss(const PipelineConfig& cfg,
                            const Eigen::MatrixXd& precision,
                            const std::vector<Eigen::VectorXd>& samples,
                            const std::vector<double>& outputs,
                            const Eigen::VectorXd& omega,
                            const std::vector<Eigen::VectorXd>* fixed_centers,
                            int* selection_counter = nullptr);

/// Loss of the candidate rank-one-updated precision; the CMA-ES search
/// vector is the rank-one target vector itself.
double kernel_cov_objective(const PipelineConfig& cfg,
                            const Eigen::MatrixXd& incumbent_precision,
                            const std::vector<Eigen::VectorXd>& samples,
                            const std::vector<double>& outputs,
                            const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& p_sigma_candidate,
                            const std::vector<Eigen::VectorXd>* fixed_centers,
                            int* selection_counter = nullptr);

struct PrecisionOptConfig {
    int max_generations = 20;
    double sigma0 = 0.5;
    double rel_tol = 1e-4;
    int stall_generations = 5;
};

/// Re-selecting variant: every candidate evaluation re-runs dictionary
/// selection and weight updating. Keeps the incumbent when no candidate
/// improves on it.
Eigen::MatrixXd optimize_precision_ald(const PipelineConfig& cfg,
                                       const Eigen::MatrixXd& incumbent,
                                       const std::vector<Eigen::VectorXd>& samples,
                                       const std::vector<double>& outputs,
                                       const Eigen::VectorXd& omega,
                                       const PrecisionOptConfig& opt,
                                       uint64_t seed,
                                       PrecisionOptStats* stats = nullptr);

/// Fixed-dictionary variant: selection runs once, before the loop;
/// candidates re-run only weight updating.
Eigen::MatrixXd optimize_precision_fixed_dict(
    const PipelineConfig& cfg, const Eigen::MatrixXd& incumbent,
    const std::vector<Eigen::VectorXd>& samples,
    const std::vector<double>& outputs, const Eigen::VectorXd& omega,
    const PrecisionOptConfig& opt, uint64_t seed,
    PrecisionOptStats* stats = nullptr);

/// Uniform or exponential-recency loss weights for the evaluation set.
Eigen::VectorXd make_omega(int n, bool exponential_recency = false,
                           double decay = 0.99);

}  // namespace okp
