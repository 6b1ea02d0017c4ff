#include "okp/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace okp {

double last_error_compensator(const std::vector<double>& error_history) {
    return error_history.empty() ? 0.0 : error_history.back();
}

SeriesGroup::SeriesGroup(UpdaterKind kind, Dictionary dict)
    : kind_(kind), dict_(std::move(dict)) {}

SeriesGroup SeriesGroup::krls(Dictionary dict, double lambda) {
    SeriesGroup g(UpdaterKind::Krls, std::move(dict));
    g.krls_ = KrlsState::init(lambda);
    const int m = g.dict_.size();
    if (m > 0) {
        // Fixed pre-selected dictionary: start from the zero solution with
        // empty sample bookkeeping of matching size.
        g.krls_.alpha = Eigen::VectorXd::Zero(m);
        g.krls_.ata = Eigen::MatrixXd::Zero(m, m);
        g.krls_.ata_inverse = Eigen::MatrixXd::Identity(m, m) * 1e12;
        g.krls_.aty = Eigen::VectorXd::Zero(m);
    }
    return g;
}

SeriesGroup SeriesGroup::mrls(Dictionary dict, double beta, int p,
                              double delta) {
    SeriesGroup g(UpdaterKind::Mrls, std::move(dict));
    g.mrls_ = MrlsState::init(g.dict_.size(), beta, p, delta);
    return g;
}

SeriesGroup SeriesGroup::recurrent_grad(Dictionary dict, double eta,
                                        double lambda_scale,
                                        std::vector<int> feedback_lags) {
    SeriesGroup g(UpdaterKind::RecurrentGrad, std::move(dict));
    g.rgrad_ = RecurrentGradState::init(g.dict_.size(), eta, lambda_scale,
                                        std::move(feedback_lags));
    return g;
}

SeriesGroup SeriesGroup::linear_rls(int p_r, double beta2, double delta) {
    SeriesGroup g(UpdaterKind::LinearRls,
                  Dictionary(KernelConfig::isotropic(1)));
    g.lrls_ = LinearRlsState::init(p_r, beta2, delta);
    return g;
}

Eigen::VectorXd SeriesGroup::weights() const {
    switch (kind_) {
        case UpdaterKind::Krls: return krls_.alpha;
        case UpdaterKind::Mrls: return mrls_.alpha;
        case UpdaterKind::RecurrentGrad: return rgrad_.alpha;
        case UpdaterKind::LinearRls: return lrls_.theta;
        default: return Eigen::VectorXd();
    }
}

double SeriesGroup::predict(const Eigen::VectorXd& x) const {
    switch (kind_) {
        case UpdaterKind::Krls:
            if (dict_.empty()) return 0.0;
            return dict_.kvec(x).dot(krls_.alpha);
        case UpdaterKind::Mrls:
            if (dict_.empty()) return 0.0;
            return dict_.kvec(x).dot(mrls_.alpha);
        case UpdaterKind::RecurrentGrad:
            if (dict_.empty()) return 0.0;
            return dict_.kvec(x).dot(rgrad_.alpha);
        case UpdaterKind::LinearRls:
            return lrls_.theta.dot(x);
        default:
            return 0.0;
    }
}

void SeriesGroup::update(const Eigen::VectorXd& x, double target) {
    switch (kind_) {
        case UpdaterKind::Krls: {
            if (dict_.empty()) {
                if (!admission_threshold_) return;
                AldResult first;
                dict_.ald_admit(x, first);
                krls_step(krls_, dict_, x, target, true, first);
                return;
            }
            AldResult ald = dict_.ald_test(x);
            if (admission_threshold_ && ald.delta1 > *admission_threshold_ &&
                !dict_.at_capacity() && dict_.ald_admit(x, ald)) {
                krls_step(krls_, dict_, x, target, true, ald);
            } else {
                krls_step(krls_, dict_, x, target, false, ald);
            }
            return;
        }
        case UpdaterKind::Mrls: {
            if (admission_threshold_ && !dict_.at_capacity()) {
                const bool admit =
                    dict_.empty() ||
                    dict_.distance_test(x).second > *admission_threshold_;
                if (admit) {
                    dict_.push_node(x);
                    const int m = dict_.size();
                    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
                    alpha.head(m - 1) = mrls_.alpha;
                    const double p_diag =
                        mrls_.P.size() > 0 ? mrls_.P.diagonal().mean() : 1e3;
                    Eigen::MatrixXd pmat =
                        Eigen::MatrixXd::Identity(m, m) * p_diag;
                    if (m > 1) pmat.topLeftCorner(m - 1, m - 1) = mrls_.P;
                    mrls_.alpha = std::move(alpha);
                    mrls_.P = std::move(pmat);
                    mrls_.window.clear();  // stored kernel vectors are stale
                }
            }
            if (dict_.empty()) return;
            try {
                mrls_step(mrls_, dict_.kvec(x), target);
            } catch (const std::runtime_error&) {
                // singular innovation matrix: keep previous state
            }
            return;
        }
        case UpdaterKind::RecurrentGrad:
            if (!dict_.empty()) recurrent_grad_step(rgrad_, dict_, x, target);
            return;
        case UpdaterKind::LinearRls:
            linear_rls_step(lrls_, x, target);
            return;
        default:
            return;
    }
}

ConnectionGraph::ConnectionGraph(std::vector<CascadeStage> stages)
    : stages_(std::move(stages)) {
    if (stages_.empty())
        throw std::invalid_argument("connection graph needs at least one stage");
    depth_errors_.resize(stages_.size());
    last_targets_.resize(stages_.size());
}

double ConnectionGraph::stage_prediction(
    int stage_index, const Eigen::VectorXd& x,
    std::optional<Eigen::VectorXd>* input) const {
    const CascadeStage& stage = stages_[static_cast<size_t>(stage_index)];
    if (stage_index == 0) {
        if (input) *input = x;
        double sum = 0.0;
        for (const auto& g : stage.groups) sum += g.predict(x);
        return sum;
    }
    const std::vector<double>& hist =
        depth_errors_[static_cast<size_t>(stage_index - 1)];
    if (stage.compensator) {
        if (input) input->reset();
        return last_error_compensator(hist);
    }
    if (static_cast<int>(hist.size()) < stage.q) {
        if (input) input->reset();
        return 0.0;  // cold start
    }
    Eigen::VectorXd v(stage.q);
    for (int j = 0; j < stage.q; ++j)
        v(j) = hist[hist.size() - 1 - static_cast<size_t>(j)];
    if (input) *input = v;
    double sum = 0.0;
    for (const auto& g : stage.groups) sum += g.predict(v);
    return sum;
}

double ConnectionGraph::predict(const Eigen::VectorXd& x, int depth) const {
    if (depth < 1 || depth > this->depth())
        throw std::invalid_argument("predict depth out of range");
    double sum = 0.0;
    for (int i = 0; i < depth; ++i) sum += stage_prediction(i, x, nullptr);
    return sum;
}

std::vector<double> ConnectionGraph::step(const Eigen::VectorXd& x, double y) {
    if (!std::isfinite(y) || !x.allFinite()) {
        ++skipped_;
        return {};
    }
    const int d = depth();
    std::vector<double> preds(static_cast<size_t>(d));
    std::vector<std::optional<Eigen::VectorXd>> inputs(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
        preds[static_cast<size_t>(i)] =
            stage_prediction(i, x, &inputs[static_cast<size_t>(i)]);

    std::vector<double> errors(static_cast<size_t>(d));
    double cum = 0.0;
    for (int i = 0; i < d; ++i) {
        cum += preds[static_cast<size_t>(i)];
        errors[static_cast<size_t>(i)] = y - cum;
    }

    // Updates: cascade order, then parallel residual order within a stage.
    for (int i = 0; i < d; ++i) {
        CascadeStage& stage = stages_[static_cast<size_t>(i)];
        if (stage.compensator) continue;
        if (!inputs[static_cast<size_t>(i)]) continue;  // cold start, no update
        const Eigen::VectorXd& in = *inputs[static_cast<size_t>(i)];
        double target = (i == 0) ? y : errors[static_cast<size_t>(i - 1)];
        auto& targets = last_targets_[static_cast<size_t>(i)];
        targets.clear();
        for (auto& g : stage.groups) {
            targets.push_back(target);
            const double p = g.predict(in);
            g.update(in, target);
            target -= p;  // next parallel group tracks this group's residual
        }
    }

    for (int i = 0; i < d; ++i)
        depth_errors_[static_cast<size_t>(i)].push_back(
            errors[static_cast<size_t>(i)]);
    active_depth_ = select_best_depth(200);
    return errors;
}

int ConnectionGraph::select_best_depth(int window) const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    int best = 1;
    double best_mse = std::numeric_limits<double>::infinity();
    for (int d = 0; d < depth(); ++d) {
        const auto& hist = depth_errors_[static_cast<size_t>(d)];
        if (hist.empty()) continue;
        const size_t n = std::min<size_t>(hist.size(), static_cast<size_t>(window));
        double mse = 0.0;
        for (size_t i = hist.size() - n; i < hist.size(); ++i)
            mse += hist[i] * hist[i];
        mse /= static_cast<double>(n);
        if (mse < best_mse) {
            best_mse = mse;
            best = d + 1;
        }
    }
    return best;
}

void ConnectionGraph::truncate_depth(int new_depth) {
    if (new_depth < 1 || new_depth > depth())
        throw std::invalid_argument("truncate_depth out of range");
    stages_.resize(static_cast<size_t>(new_depth));
    depth_errors_.resize(static_cast<size_t>(new_depth));
    last_targets_.resize(static_cast<size_t>(new_depth));
    active_depth_ = std::min(active_depth_, new_depth);
}

namespace {

double default_distance_threshold(const std::vector<Eigen::VectorXd>& xs) {
    // 0.1 * (median pairwise distance)^2 over a bounded subsample.
    const size_t stride = std::max<size_t>(1, xs.size() / 100);
    std::vector<const Eigen::VectorXd*> sub;
    for (size_t i = 0; i < xs.size(); i += stride) sub.push_back(&xs[i]);
    std::vector<double> dists;
    for (size_t i = 0; i < sub.size(); ++i)
        for (size_t j = i + 1; j < sub.size(); ++j)
            dists.push_back((*sub[i] - *sub[j]).norm());
    if (dists.empty()) return 0.0;
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2,
                     dists.end());
    const double med = dists[dists.size() / 2];
    return 0.1 * med * med;
}

}  // namespace

Dictionary select_dictionary(const TopologyConfig& config,
                             const std::vector<Eigen::VectorXd>& xs,
                             const std::vector<double>& ys) {
    if (xs.empty()) throw std::invalid_argument("empty training stream");
    Dictionary dict(config.kernel, config.m);
    switch (config.sparsifier) {
        case SparsifierKind::Ald:
            for (const auto& x : xs) {
                if (dict.empty()) {
                    dict.ald_admit(x, AldResult{});
                    continue;
                }
                if (dict.at_capacity()) break;
                const AldResult ald = dict.ald_test(x);
                if (ald.delta1 > config.nu1) dict.ald_admit(x, ald);
            }
            break;
        case SparsifierKind::Distance: {
            const double nu2 =
                config.nu2 ? *config.nu2 : default_distance_threshold(xs);
            for (const auto& x : xs) {
                if (dict.at_capacity()) break;
                if (dict.empty() || dict.distance_test(x).second > nu2)
                    dict.push_node(x);
            }
            break;
        }
        case SparsifierKind::Ofs: {
            // Bounded candidate set keeps the N_t x N_t matrix tractable.
            const size_t stride = std::max<size_t>(1, xs.size() / 500);
            std::vector<Eigen::VectorXd> cand;
            std::vector<double> yv;
            for (size_t i = 0; i < xs.size(); i += stride) {
                cand.push_back(xs[i]);
                yv.push_back(ys[i]);
            }
            OfsBudget budget;
            budget.max_terms = config.m;
            const OfsSelection sel = ofs_select(
                cand, Eigen::Map<const Eigen::VectorXd>(yv.data(),
                                                        static_cast<Eigen::Index>(yv.size())),
                config.kernel, budget);
            for (int idx : sel.selected_indices)
                dict.push_node(cand[static_cast<size_t>(idx)]);
            break;
        }
        case SparsifierKind::None: {
            if (!config.m)
                throw std::invalid_argument("sparsifier 'none' requires m");
            const int m = std::min<int>(*config.m, static_cast<int>(xs.size()));
            for (int i = 0; i < m; ++i)
                dict.push_node(xs[static_cast<size_t>(i) * xs.size() /
                                  static_cast<size_t>(m)]);
            break;
        }
    }
    return dict;
}

namespace {

SeriesGroup make_stage1_group(const TopologyConfig& cfg, Dictionary dict) {
    switch (cfg.stage1_updater) {
        case UpdaterKind::Krls:
            return SeriesGroup::krls(std::move(dict), cfg.lambda);
        case UpdaterKind::Mrls:
            return SeriesGroup::mrls(std::move(dict), cfg.beta, cfg.p);
        case UpdaterKind::RecurrentGrad:
            return SeriesGroup::recurrent_grad(std::move(dict), cfg.eta,
                                               cfg.rec_lambda_scale,
                                               cfg.feedback_lags);
        default:
            throw std::invalid_argument("unsupported stage-1 updater");
    }
}

}  // namespace

ConnectionGraph train_construct(const TopologyConfig& config,
                                const std::vector<Eigen::VectorXd>& xs,
                                const std::vector<double>& ys) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("training stream empty or misaligned");

    Dictionary full = select_dictionary(config, xs, ys);
    const int m = full.size();

    std::vector<int> partition = config.partition;
    if (partition.empty()) partition = {m};
    if (std::accumulate(partition.begin(), partition.end(), 0) != m)
        throw std::invalid_argument(
            "partition sizes do not sum to the dictionary size");

    std::vector<CascadeStage> stages;
    CascadeStage stage1;
    int offset = 0;
    for (int size : partition) {
        Dictionary sub(config.kernel);
        for (int i = 0; i < size; ++i)
            sub.push_node(full.centers()[static_cast<size_t>(offset + i)]);
        offset += size;
        stage1.groups.push_back(make_stage1_group(config, std::move(sub)));
    }
    stages.push_back(std::move(stage1));

    for (int d = 1; d < config.cascade_depth; ++d) {
        CascadeStage stage;
        stage.q = config.q;
        switch (config.cascade_updater) {
            case UpdaterKind::LastError:
                stage.compensator = true;
                stage.q = 1;
                break;
            case UpdaterKind::LinearRls:
                stage.groups.push_back(
                    SeriesGroup::linear_rls(config.q, config.beta2));
                break;
            case UpdaterKind::Krls: {
                Dictionary empty(
                    KernelConfig::isotropic(config.q,
                                            config.kernel.precision(0, 0),
                                            config.kernel.h0),
                    config.cascade_m);
                SeriesGroup g = SeriesGroup::krls(std::move(empty), config.lambda);
                g.enable_admission(config.cascade_nu1);
                stage.groups.push_back(std::move(g));
                break;
            }
            default:
                throw std::invalid_argument("unsupported cascade updater");
        }
        stages.push_back(std::move(stage));
    }

    ConnectionGraph graph(std::move(stages));
    for (size_t n = 0; n < xs.size(); ++n) graph.step(xs[n], ys[n]);

    // Cascade dictionaries are frozen once training ends.
    for (auto& stage : graph.stages())
        for (auto& g : stage.groups) g.disable_admission();

    if (config.auto_depth && graph.depth() > 1) {
        std::vector<double> mse(static_cast<size_t>(graph.depth()));
        const int window = config.validation_window;
        for (int d = 0; d < graph.depth(); ++d) {
            const auto& hist = graph.depth_errors()[static_cast<size_t>(d)];
            const size_t n =
                std::min<size_t>(hist.size(), static_cast<size_t>(window));
            double s = 0.0;
            for (size_t i = hist.size() - n; i < hist.size(); ++i)
                s += hist[i] * hist[i];
            mse[static_cast<size_t>(d)] = n ? s / static_cast<double>(n) : 0.0;
        }
        int keep = 1;
        while (keep < graph.depth() &&
               mse[static_cast<size_t>(keep)] <=
                   0.99 * mse[static_cast<size_t>(keep - 1)])
            ++keep;
        graph.truncate_depth(keep);
    }
    return graph;
}

}  // namespace okp
