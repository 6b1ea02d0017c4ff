#include "okp/datasets.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace okp {

namespace {

using Deriv = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

Eigen::VectorXd integrate_step(const Deriv& f, double t,
                               const Eigen::VectorXd& s, double h,
                               Integrator integrator) {
    if (integrator == Integrator::Euler) return s + h * f(t, s);
    const Eigen::VectorXd k1 = f(t, s);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, s + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, s + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<TimeSeriesRecord> integrate(const Deriv& f, int n_samples,
                                        double step,
                                        const Eigen::VectorXd& start,
                                        Integrator integrator) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    std::vector<TimeSeriesRecord> out;
    out.reserve(static_cast<size_t>(n_samples));
    Eigen::VectorXd s = start;
    for (int n = 0; n < n_samples; ++n) {
        out.push_back({n, s});
        s = integrate_step(f, n * step, s, step, integrator);
    }
    return out;
}

}  // namespace

std::vector<TimeSeriesRecord> gen_lorenz(int n_samples, double step,
                                         const Eigen::Vector3d& start,
                                         Integrator integrator) {
    const Deriv f = [](double t, const Eigen::VectorXd& z) {
        const double sigma1 = 10.0;
        const double b = (4.0 + 3.0 * (1.0 + std::sin(0.1 * t))) / 3.0;
        const double r = 25.0 + 3.0 * (1.0 + std::cos(std::pow(2.0, 0.001 * t)));
        Eigen::VectorXd d(3);
        d(0) = sigma1 * (z(1) - z(0));
        d(1) = -z(0) * z(2) + r * z(0) - z(1);
        d(2) = z(0) * z(1) - b * z(2);
        return d;
    };
    return integrate(f, n_samples, step, start, integrator);
}

std::vector<TimeSeriesRecord> gen_rlc(int n_samples, double step,
                                      const Eigen::Vector2d& start,
                                      Integrator integrator) {
    const Deriv f = [](double t, const Eigen::VectorXd& x) {
        const double omega_c = 5.0 * std::cos(0.05 * t);
        const double delta_t = -0.5;
        Eigen::VectorXd d(2);
        d(0) = x(1);
        d(1) = -omega_c * omega_c * x(0) - 2.0 * delta_t * x(1);
        return d;
    };
    return integrate(f, n_samples, step, start, integrator);
}

std::vector<TimeSeriesRecord> load_sunspot(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open sunspot file: " + path);
    std::vector<TimeSeriesRecord> out;
    std::string line;
    double prev_date = -1e300;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string date_field, value_field;
        if (!std::getline(row, date_field, ',') ||
            !std::getline(row, value_field, ','))
            throw std::runtime_error("sunspot file: expected date,value rows");
        double date, value;
        try {
            // Accept fractional-year dates and "YYYY-MM" month stamps.
            const auto dash = date_field.find('-', 1);
            if (dash != std::string::npos) {
                const double year = std::stod(date_field.substr(0, dash));
                const double month = std::stod(date_field.substr(dash + 1));
                if (month < 1 || month > 12)
                    throw std::runtime_error("month out of range");
                date = year + (month - 1.0) / 12.0;
            } else {
                date = std::stod(date_field);
            }
            value = std::stod(value_field);
        } catch (const std::exception&) {
            if (n == 0 && out.empty()) continue;  // header row
            throw std::runtime_error("sunspot file: unparsable row: " + line);
        }
        if (date <= prev_date)
            throw std::runtime_error("sunspot file: dates not increasing");
        if (value < 0.0)
            throw std::runtime_error("sunspot file: negative count");
        prev_date = date;
        Eigen::VectorXd s(1);
        s(0) = value;
        out.push_back({n++, s});
    }
    if (out.size() < 2280)
        throw std::runtime_error(
            "sunspot file too short: need >= 2280 monthly samples "
            "(1830-2019 span), got " + std::to_string(out.size()));
    return out;
}

std::vector<SupervisedPair> make_supervised(
    const std::vector<TimeSeriesRecord>& series, const InputSpec& spec,
    int horizon, int target_component) {
    std::vector<SupervisedPair> out;
    const int len = static_cast<int>(series.size());
    if (spec.lags > 0) {
        // x_n = [s(n-1) ... s(n-lags)], y = s(n-1+horizon), component 0.
        for (int n = spec.lags; n + horizon - 1 < len; ++n) {
            Eigen::VectorXd x(spec.lags);
            for (int j = 0; j < spec.lags; ++j)
                x(j) = series[static_cast<size_t>(n - 1 - j)].state(0);
            out.push_back(
                {x, series[static_cast<size_t>(n - 1 + horizon)].state(
                        target_component),
                 n});
        }
        return out;
    }
    for (int n = 0; n + horizon < len; ++n) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(spec.components.size()));
        for (size_t j = 0; j < spec.components.size(); ++j)
            x(static_cast<Eigen::Index>(j)) =
                series[static_cast<size_t>(n)].state(spec.components[j]);
        out.push_back(
            {x, series[static_cast<size_t>(n + horizon)].state(target_component),
             n});
    }
    return out;
}

void write_series_csv(const std::string& path,
                      const std::vector<TimeSeriesRecord>& series) {
    std::ofstream outf(path);
    if (!outf) throw std::runtime_error("cannot write " + path);
    outf << 'n';
    if (!series.empty())
        for (Eigen::Index i = 0; i < series.front().state.size(); ++i)
            outf << ",c" << i;
    outf << '\n';
    for (const auto& rec : series) {
        outf << rec.t;
        for (Eigen::Index i = 0; i < rec.state.size(); ++i)
            outf << ',' << rec.state(i);
        outf << '\n';
    }
}

}  // namespace okp
