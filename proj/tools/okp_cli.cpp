// Command-line front end: dataset generation, config-driven experiment
// runs, grid sweeps, and a quick self-check.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "okp/cmaes.hpp"
#include "okp/datasets.hpp"
#include "okp/experiment.hpp"
#include "okp/weights.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_generate(const std::string& dataset, int n, const std::string& out,
                 const std::string& integrator) {
    const okp::Integrator integ = integrator == "euler"
                                      ? okp::Integrator::Euler
                                      : okp::Integrator::Rk4;
    std::vector<okp::TimeSeriesRecord> series;
    if (dataset == "lorenz")
        series = okp::gen_lorenz(n, 0.01, {0, 1, 0}, integ);
    else if (dataset == "rlc")
        series = okp::gen_rlc(n, 0.008, {0, 0.30}, integ);
    else if (dataset == "sunspot")
        series = okp::gen_sunspot_surrogate(n);
    else {
        std::cerr << "unknown dataset: " << dataset << "\n";
        return 1;
    }
    okp::write_series_csv(out, series);
    std::cout << "wrote " << series.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            const std::string& out, const std::string& format) {
    okp::ExperimentConfig cfg = okp::parse_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out_dir = out;
    if (!format.empty()) cfg.format = format;
    const okp::MetricsReport report = okp::run_experiment(cfg);
    okp::write_report(cfg, report);
    std::printf("%-6s %-14s %-14s\n", "depth", "MAE", "MSE");
    for (size_t d = 0; d < report.mae.size(); ++d)
        std::printf("%-6zu %-14.6g %-14.6g\n", d + 1, report.mae[d],
                    report.mse[d]);
    std::printf("best depth: %d  (%.2f s)\n", report.best_depth,
                report.wall_seconds);
    return 0;
}

// One sweep axis: "section.key=v1,v2,...".
struct Axis {
    std::string section, key;
    std::vector<std::string> values;
};

Axis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    const auto dot = text.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw std::invalid_argument("sweep axis must be section.key=v1,v2,...");
    Axis axis;
    axis.section = text.substr(0, dot);
    axis.key = text.substr(dot + 1, eq - dot - 1);
    std::istringstream ss(text.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) axis.values.push_back(tok);
    if (axis.values.empty())
        throw std::invalid_argument("sweep axis has no values: " + text);
    return axis;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& axis_specs,
              const std::string& out_dir, int jobs) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open config: " << config_path << "\n";
        return 1;
    }
    std::ostringstream base;
    base << in.rdbuf();

    std::vector<Axis> axes;
    for (const auto& spec : axis_specs) axes.push_back(parse_axis(spec));

    // Cartesian product of the axes; overrides are appended to the base
    // config text so the strict parser validates them too.
    struct Job {
        std::string text, label;
    };
    std::vector<Job> grid{{base.str(), ""}};
    for (const auto& axis : axes) {
        std::vector<Job> next;
        for (const auto& job : grid)
            for (const auto& v : axis.values) {
                Job j = job;
                j.text += "\n[" + axis.section + "]\n" + axis.key + " = " + v + "\n";
                j.label += (j.label.empty() ? "" : "_") + axis.key + v;
                next.push_back(std::move(j));
            }
        grid = std::move(next);
    }

    std::vector<okp::ExperimentConfig> cfgs;
    for (auto& job : grid) {
        okp::ExperimentConfig cfg = okp::parse_config_text(job.text);
        cfg.out_dir = (fs::path(out_dir) / job.label).string();
        cfgs.push_back(cfg);
    }

    std::vector<std::future<std::pair<double, double>>> futures;
    size_t cursor = 0;
    std::vector<std::pair<double, double>> best(cfgs.size());
    while (cursor < cfgs.size()) {
        const size_t batch =
            std::min<size_t>(static_cast<size_t>(jobs), cfgs.size() - cursor);
        futures.clear();
        for (size_t k = 0; k < batch; ++k) {
            const okp::ExperimentConfig cfg = cfgs[cursor + k];
            futures.push_back(std::async(std::launch::async, [cfg] {
                const auto report = okp::run_experiment(cfg);
                okp::write_report(cfg, report);
                const size_t d = static_cast<size_t>(report.best_depth - 1);
                return std::make_pair(report.mae[d], report.mse[d]);
            }));
        }
        for (size_t k = 0; k < batch; ++k)
            best[cursor + k] = futures[k].get();
        cursor += batch;
    }

    std::printf("%-40s %-14s %-14s\n", "run", "best MAE", "best MSE");
    for (size_t i = 0; i < cfgs.size(); ++i)
        std::printf("%-40s %-14.6g %-14.6g\n",
                    grid[i].label.empty() ? "(base)" : grid[i].label.c_str(),
                    best[i].first, best[i].second);
    return 0;
}

int cmd_verify() {
    int failures = 0;
    const auto check = [&](const char* name, bool ok) {
        std::printf("%-40s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    const auto lorenz = okp::gen_lorenz(10);
    check("lorenz start (0,1,0)",
          lorenz[0].state == Eigen::Vector3d(0, 1, 0));
    const auto rlc = okp::gen_rlc(10);
    check("rlc start (0,0.30)", rlc[0].state == Eigen::Vector2d(0, 0.30));

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    check("batch least squares identity",
          (okp::batch_ls_oracle(a, y, 0.0) - y).cwiseAbs().maxCoeff() < 1e-12);

    const auto sphere = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    okp::CmaesTermination term;
    term.max_evaluations = 5000;
    const auto result =
        okp::optimize(sphere, Eigen::VectorXd::Constant(5, 3.0), 2.0,
                      okp::CmaesParams::defaults(5), term, 7);
    check("cma-es sphere convergence", result.best_f <= 1e-10);

    okp::ExperimentConfig cfg;
    cfg.dataset = "rlc";
    cfg.n_samples = 600;
    cfg.train_end = 300;
    cfg.test_end = 600;
    cfg.val_start = 200;
    cfg.val_end = 300;
    cfg.depth = 3;
    const auto report = okp::run_experiment(cfg);
    check("rlc smoke run finite",
          std::isfinite(report.mse[0]) && report.mse.size() == 3);

    std::printf(failures ? "%d check(s) failed\n" : "all checks passed\n",
                failures);
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online kernel prediction experiments"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Write a dataset to CSV");
    std::string gen_dataset = "lorenz", gen_out = "series.csv",
                gen_integrator = "rk4";
    int gen_n = 8000;
    gen->add_option("--dataset", gen_dataset, "lorenz | rlc | sunspot");
    gen->add_option("--n", gen_n, "number of samples");
    gen->add_option("--out", gen_out, "output CSV path");
    gen->add_option("--integrator", gen_integrator, "rk4 | euler");

    auto* run = app.add_subcommand("run", "Run one experiment config");
    std::string run_config, run_out, run_format;
    uint64_t run_seed = 0;
    bool run_seed_set = false;
    run->add_option("--config", run_config, "config file")->required();
    run->add_option("--seed", run_seed, "seed override")
        ->each([&](const std::string&) { run_seed_set = true; });
    run->add_option("--out", run_out, "output directory override");
    run->add_option("--format", run_format, "csv | tsv");

    auto* sweep = app.add_subcommand("sweep", "Grid sweep over config keys");
    std::string sweep_config, sweep_out = "sweep_out";
    std::vector<std::string> sweep_axes;
    int sweep_jobs = 4;
    sweep->add_option("--config", sweep_config, "base config file")->required();
    sweep->add_option("--set", sweep_axes,
                      "axis as section.key=v1,v2,... (repeatable)");
    sweep->add_option("--out", sweep_out, "output root directory");
    sweep->add_option("--jobs", sweep_jobs, "parallel runs");

    auto* verify = app.add_subcommand("verify", "Run built-in quick checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_dataset, gen_n, gen_out, gen_integrator);
        if (run->parsed())
            return cmd_run(run_config,
                           run_seed_set ? std::optional<uint64_t>(run_seed)
                                        : std::nullopt,
                           run_out, run_format);
        if (sweep->parsed())
            return cmd_sweep(sweep_config, sweep_axes, sweep_out, sweep_jobs);
        if (verify->parsed()) return cmd_verify();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
