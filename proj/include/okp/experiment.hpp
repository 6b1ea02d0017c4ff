// Config-driven experiment runner: dataset split, graph training, online
// prequential loop, per-depth MAE/MSE reporting and trace export.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okp/datasets.hpp"
#include "okp/topology.hpp"

namespace okp {

enum class PrecisionOptMode { Off, Alg1, Alg2 };

struct ExperimentConfig {
    // [dataset]
    std::string dataset = "lorenz";  // lorenz | rlc | sunspot | csv
    std::string path;                // sunspot/csv input file
    int n_samples = 8000;
    int train_end = 3000;
    int test_end = 8000;
    int val_start = 2500;
    int val_end = 3000;
    bool normalize = false;

    // [algorithm]
    std::string sparsifier = "ald";  // ald | distance | ofs | none
    std::string updater = "krls";    // krls | mrls | recurrent_grad
    double nu1 = 0.01;
    double nu2 = -1.0;  // < 0: data-driven default
    double nu3 = 1e-4;
    double lambda = 1e-6;
    double beta = 1.0;
    int p = 1;
    double eta = 0.01;
    double rec_lambda = 0.0;
    double h0 = 1.0;
    double precision_scale = 1.0;  // isotropic initial precision
    int m = -1;                    // dictionary cap; < 0 = uncapped

    // [topology]
    int depth = 1;
    std::string partition = "flat";       // flat | "(3,3)" | "1x6"
    std::string cascade_updater = "last_error";  // last_error | linear_rls | krls
    int q = 1;
    double beta2 = 1.0;
    bool auto_depth = false;

    // [precision_opt]
    PrecisionOptMode popt_mode = PrecisionOptMode::Off;
    int popt_generations = 20;
    double popt_sigma0 = 0.5;
    std::string omega_scheme = "uniform";  // uniform | exponential
    int popt_sign = +1;

    // [run]
    uint64_t seed = 1;
    std::string out_dir = ".";
    std::string format = "csv";  // csv | tsv
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

struct MetricsReport {
    std::vector<double> mae;  // per depth
    std::vector<double> mse;
    std::vector<double> test_y;
    std::vector<std::vector<double>> predictions;  // per depth
    std::vector<std::vector<double>> errors;       // per depth
    std::vector<int> test_index;
    int best_depth = 1;
    std::string config_echo;
    double wall_seconds = 0.0;
};

std::pair<double, double> compute_metrics(const std::vector<double>& errors);

MetricsReport run_experiment(const ExperimentConfig& config);

/// Writes report.(c|t)sv and trace_depth{d}.(c|t)sv into config.out_dir.
void write_report(const ExperimentConfig& config, const MetricsReport& report);

/// Deterministic surrogate for the monthly sunspot benchmark (solar-cycle
/// shaped, non-negative, 2280 samples starting 1830).
std::vector<TimeSeriesRecord> gen_sunspot_surrogate(int n_samples = 2280);

}  // namespace okp
