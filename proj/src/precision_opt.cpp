#include "okp/precision_opt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace okp {

namespace {

std::vector<Eigen::VectorXd> run_selection(const PipelineConfig& cfg,
                                           const KernelConfig& kcfg,
                                           const std::vector<Eigen::VectorXd>& samples) {
    Dictionary dict(kcfg, cfg.max_size);
    if (cfg.sparsifier == SparsifierKind::Ald) {
        for (const auto& x : samples) {
            if (dict.empty()) {
                dict.ald_admit(x, AldResult{});
                continue;
            }
            if (dict.at_capacity()) break;
            const AldResult ald = dict.ald_test(x);
            if (ald.delta1 > cfg.nu1) dict.ald_admit(x, ald);
        }
    } else {
        for (const auto& x : samples) {
            if (dict.at_capacity()) break;
            if (dict.empty() || dict.distance_test(x).second > cfg.nu2)
                dict.push_node(x);
        }
    }
    return dict.centers();
}

}  // namespace

double replay_pipeline_loss(const PipelineConfig& cfg,
                            const Eigen::MatrixXd& precision,
                            const std::vector<Eigen::VectorXd>& samples,
                            const std::vector<double>& outputs,
                            const Eigen::VectorXd& omega,
                            const std::vector<Eigen::VectorXd>* fixed_centers,
                            int* selection_counter) {
    if (samples.empty()) throw std::invalid_argument("empty evaluation set");
    if (omega.size() != static_cast<Eigen::Index>(samples.size()) ||
        samples.size() != outputs.size())
        throw std::invalid_argument("evaluation set size mismatch");
    if (omega.minCoeff() < 0.0)
        throw std::invalid_argument("negative loss weight");

    const KernelConfig kcfg{precision, cfg.h0};
    SeriesGroup group = [&] {
        Dictionary dict(kcfg, cfg.max_size);
        if (fixed_centers) {
            for (const auto& c : *fixed_centers) dict.push_node(c);
        } else {
            if (selection_counter) ++*selection_counter;
            for (const auto& c : run_selection(cfg, kcfg, samples))
                dict.push_node(c);
        }
        if (cfg.updater == UpdaterKind::Mrls)
            return SeriesGroup::mrls(std::move(dict), cfg.beta, cfg.p);
        return SeriesGroup::krls(std::move(dict), cfg.lambda);
    }();

    double loss = 0.0;
    for (size_t n = 0; n < samples.size(); ++n) {
        const double err = outputs[n] - group.predict(samples[n]);
        loss += omega(static_cast<Eigen::Index>(n)) * err * err;
        group.update(samples[n], outputs[n]);
    }
    return loss;
}

double kernel_cov_objective(const PipelineConfig& cfg,
                            const Eigen::MatrixXd& incumbent_precision,
                            const std::vector<Eigen::VectorXd>& samples,
                            const std::vector<double>& outputs,
                            const Eigen::VectorXd& omega,
                            const Eigen::VectorXd& p_sigma_candidate,
                            const std::vector<Eigen::VectorXd>* fixed_centers,
                            int* selection_counter) {
    const int px = static_cast<int>(incumbent_precision.rows());
    const double c0 = cfg.c0 > 0.0 ? cfg.c0 : 2.0 / (px * px);
    KernelNode node{Eigen::VectorXd::Zero(px), incumbent_precision, cfg.h0};
    const KernelNode updated =
        rank_one_precision_update(node, p_sigma_candidate, c0, cfg.sign);
    try {
        return replay_pipeline_loss(cfg, updated.precision, samples, outputs,
                                    omega, fixed_centers, selection_counter);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();  // ranked last
    }
}

namespace {

Eigen::MatrixXd optimize_precision_impl(
    const PipelineConfig& cfg, const Eigen::MatrixXd& incumbent,
    const std::vector<Eigen::VectorXd>& samples,
    const std::vector<double>& outputs, const Eigen::VectorXd& omega,
    const PrecisionOptConfig& opt, uint64_t seed, bool fixed_dict,
    PrecisionOptStats* stats) {
    const int px = static_cast<int>(incumbent.rows());
    int selections = 0;

    std::vector<Eigen::VectorXd> centers;
    const std::vector<Eigen::VectorXd>* fixed = nullptr;
    if (fixed_dict) {
        // Fixed-dictionary mode: the selection procedure runs exactly once.
        centers = run_selection(cfg, KernelConfig{incumbent, cfg.h0}, samples);
        ++selections;
        fixed = &centers;
    }

    const double incumbent_loss = replay_pipeline_loss(
        cfg, incumbent, samples, outputs, omega, fixed,
        fixed_dict ? nullptr : &selections);

    CmaesResult best;
    best.best_f = std::numeric_limits<double>::infinity();
    if (opt.max_generations > 0) {
        const CmaesParams params = CmaesParams::defaults(px);
        CmaesTermination term;
        term.max_generations = opt.max_generations;
        term.max_evaluations = opt.max_generations * params.lambda_c;
        term.rel_tol = opt.rel_tol;
        term.stall_generations = opt.stall_generations;
        best = optimize(
            [&](const Eigen::VectorXd& p_sigma) {
                return kernel_cov_objective(cfg, incumbent, samples, outputs,
                                            omega, p_sigma, fixed,
                                            fixed_dict ? nullptr : &selections);
            },
            Eigen::VectorXd::Zero(px), opt.sigma0, params, term, seed);
    }

    if (stats) {
        stats->dictionary_selections = selections;
        stats->initial_loss = incumbent_loss;
        stats->final_loss = std::min(incumbent_loss, best.best_f);
    }
    if (best.best_f >= incumbent_loss) return incumbent;  // incumbent protection
    const double c0 = cfg.c0 > 0.0 ? cfg.c0 : 2.0 / (px * px);
    KernelNode node{Eigen::VectorXd::Zero(px), incumbent, cfg.h0};
    return rank_one_precision_update(node, best.best_x, c0, cfg.sign).precision;
}

}  // namespace

Eigen::MatrixXd optimize_precision_ald(const PipelineConfig& cfg,
                                       const Eigen::MatrixXd& incumbent,
                                       const std::vector<Eigen::VectorXd>& samples,
                                       const std::vector<double>& outputs,
                                       const Eigen::VectorXd& omega,
                                       const PrecisionOptConfig& opt,
                                       uint64_t seed,
                                       PrecisionOptStats* stats) {
    return optimize_precision_impl(cfg, incumbent, samples, outputs, omega, opt,
                                   seed, /*fixed_dict=*/false, stats);
}

Eigen::MatrixXd optimize_precision_fixed_dict(
    const PipelineConfig& cfg, const Eigen::MatrixXd& incumbent,
    const std::vector<Eigen::VectorXd>& samples,
    const std::vector<double>& outputs, const Eigen::VectorXd& omega,
    const PrecisionOptConfig& opt, uint64_t seed, PrecisionOptStats* stats) {
    return optimize_precision_impl(cfg, incumbent, samples, outputs, omega, opt,
                                   seed, /*fixed_dict=*/true, stats);
}

Eigen::VectorXd make_omega(int n, bool exponential_recency, double decay) {
    Eigen::VectorXd w(n);
    if (!exponential_recency) {
        w.setConstant(1.0 / n);
        return w;
    }
    for (int i = 0; i < n; ++i) w(i) = std::pow(decay, n - 1 - i);
    w /= w.sum();
    return w;
}

}  // namespace okp
