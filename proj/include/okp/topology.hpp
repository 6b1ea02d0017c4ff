// Series/parallel/cascade kernel connections: per-group residual training,
// additive prediction per cascade depth, and online best-depth monitoring.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "okp/dictionary.hpp"
#include "okp/weights.hpp"

namespace okp {

enum class UpdaterKind { Krls, Mrls, RecurrentGrad, LinearRls, LastError };
enum class SparsifierKind { Ald, Distance, Ofs, None };

/// Most recent recorded error, or 0 when the history is empty.
double last_error_compensator(const std::vector<double>& error_history);

// One series-connected group: a dictionary whose nodes share a kernel
// configuration, plus a weight updater over those nodes.
class SeriesGroup {
public:
    static SeriesGroup krls(Dictionary dict, double lambda);
    static SeriesGroup mrls(Dictionary dict, double beta, int p,
                            double delta = 1e-3);
    static SeriesGroup recurrent_grad(Dictionary dict, double eta,
                                      double lambda_scale,
                                      std::vector<int> feedback_lags);
    static SeriesGroup linear_rls(int p_r, double beta2, double delta = 1e-3);

    UpdaterKind kind() const { return kind_; }
    const Dictionary& dictionary() const { return dict_; }
    Eigen::VectorXd weights() const;

    double predict(const Eigen::VectorXd& x) const;
    void update(const Eigen::VectorXd& x, double target);

    // Dictionary admission interleaved with weight updates; honoured by
    // update() for Krls (ALD criterion) and Mrls (distance criterion).
    void enable_admission(double threshold) {
        admission_threshold_ = threshold;
    }
    void disable_admission() { admission_threshold_.reset(); }

private:
    SeriesGroup(UpdaterKind kind, Dictionary dict);

    UpdaterKind kind_;
    Dictionary dict_;
    KrlsState krls_;
    MrlsState mrls_;
    RecurrentGradState rgrad_;
    LinearRlsState lrls_;
    std::optional<double> admission_threshold_;
};

// One cascade stage: an ordered list of parallel-connected series groups
// trained on successive residuals of the stage target, or a bare
// last-error compensator.
struct CascadeStage {
    std::vector<SeriesGroup> groups;  // empty for a compensator stage
    bool compensator = false;
    int q = 1;  // error lags forming the input of stages past the first
};

// Cascade-ordered stages. Stage 1 predicts y from the raw input; stage
// i > 1 predicts the forthcoming error of the depth-(i-1) additive model
// from the last q recorded errors of that depth.
class ConnectionGraph {
public:
    explicit ConnectionGraph(std::vector<CascadeStage> stages);

    int depth() const { return static_cast<int>(stages_.size()); }
    int active_depth() const { return active_depth_; }

    /// Depth-d additive prediction; no state is modified.
    double predict(const Eigen::VectorXd& x, int depth) const;

    /// Prequential step: per-depth predictions are computed before any
    /// update, all error channels recorded, stage weights updated in
    /// cascade-then-parallel order. Returns the per-depth errors, or an
    /// empty vector when y is non-finite (sample skipped).
    std::vector<double> step(const Eigen::VectorXd& x, double y);

    /// argmin over depths of windowed MSE of prequential errors; ties and
    /// empty histories resolve to the smaller depth / depth 1.
    int select_best_depth(int window) const;

    const std::vector<std::vector<double>>& depth_errors() const {
        return depth_errors_;
    }
    /// Targets each parallel group was last updated against (per stage).
    const std::vector<std::vector<double>>& last_stage_targets() const {
        return last_targets_;
    }
    std::vector<CascadeStage>& stages() { return stages_; }
    const std::vector<CascadeStage>& stages() const { return stages_; }
    int skipped_samples() const { return skipped_; }

    /// Drops stages and error channels past `new_depth`.
    void truncate_depth(int new_depth);

private:
    double stage_prediction(int stage_index, const Eigen::VectorXd& x,
                            std::optional<Eigen::VectorXd>* input) const;

    std::vector<CascadeStage> stages_;
    std::vector<std::vector<double>> depth_errors_;
    std::vector<std::vector<double>> last_targets_;
    int active_depth_ = 1;
    int skipped_ = 0;
};

struct TopologyConfig {
    KernelConfig kernel;
    SparsifierKind sparsifier = SparsifierKind::Ald;
    double nu1 = 0.01;
    std::optional<double> nu2;  // default: 0.1 * (median pairwise distance)^2
    std::optional<int> m;       // dictionary size cap
    std::vector<int> partition;  // empty = one flat group; must sum to m

    UpdaterKind stage1_updater = UpdaterKind::Krls;
    double lambda = 1e-6;
    double beta = 1.0;
    int p = 1;
    double eta = 0.01;
    double rec_lambda_scale = 0.0;
    std::vector<int> feedback_lags;

    int cascade_depth = 1;
    UpdaterKind cascade_updater = UpdaterKind::LastError;
    int q = 1;
    double beta2 = 1.0;
    double cascade_nu1 = 0.01;
    std::optional<int> cascade_m;

    bool auto_depth = false;
    int validation_window = 200;
};

/// Stage-1 dictionary selection over the training inputs.
Dictionary select_dictionary(const TopologyConfig& config,
                             const std::vector<Eigen::VectorXd>& xs,
                             const std::vector<double>& ys);

/// Builds the graph end to end: dictionary selection,
/// parallel partitioning, cascade construction, then one training pass.
ConnectionGraph train_construct(const TopologyConfig& config,
                                const std::vector<Eigen::VectorXd>& xs,
                                const std::vector<double>& ys);

}  // namespace okp
