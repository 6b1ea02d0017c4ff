// Generators and loaders for the benchmark time series, plus
// supervised-pair construction.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace okp {

struct TimeSeriesRecord {
    int t = 0;
    Eigen::VectorXd state;
};

struct SupervisedPair {
    Eigen::VectorXd x;
    double y = 0.0;
    int n = 0;  // origin index
};

enum class Integrator { Rk4, Euler };

/// Lorenz system with time-varying control parameters
/// sigma1 = 10, b = (4 + 3(1 + sin(0.1 t))) / 3, r = 25 + 3(1 + cos(2^{0.001 t})).
std::vector<TimeSeriesRecord> gen_lorenz(int n_samples, double step = 0.01,
                                         const Eigen::Vector3d& start = {0, 1, 0},
                                         Integrator integrator = Integrator::Rk4);

/// Second-order RLC circuit with omega_c(t) = 5 cos(0.05 t), delta_t = -1/2.
std::vector<TimeSeriesRecord> gen_rlc(int n_samples, double step = 0.008,
                                      const Eigen::Vector2d& start = {0, 0.30},
                                      Integrator integrator = Integrator::Rk4);

/// Monthly sunspot series from a (date, value) CSV. Requires >= 2280 rows,
/// non-negative values and strictly increasing dates.
std::vector<TimeSeriesRecord> load_sunspot(const std::string& path);

struct InputSpec {
    // Either component indices taken at the origin sample (e.g. full state),
    // or lagged copies of one component.
    std::vector<int> components;  // used when lags == 0
    int lags = 0;                 // >0: x = [s(n-1) ... s(n-lags)] of component 0
};

std::vector<SupervisedPair> make_supervised(
    const std::vector<TimeSeriesRecord>& series, const InputSpec& spec,
    int horizon, int target_component);

void write_series_csv(const std::string& path,
                      const std::vector<TimeSeriesRecord>& series);

}  // namespace okp
