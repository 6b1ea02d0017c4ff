// Online weight-vector updaters: ALD-KRLS, multi-innovation RLS,
// recurrent-gradient update, linear RLS, and a batch least-squares oracle.
#pragma once

#include <Eigen/Dense>
#include <deque>

#include "okp/dictionary.hpp"

namespace okp {

// Tracks the exact regularized least-squares solution over all samples
// seen so far: alpha = argmin ||y - A K alpha||^2 + lambda ||alpha||^2,
// where row n of A is the ALD coefficient vector of sample n (a unit
// vector for admitted samples, zero-padded on expansion).
struct KrlsState {
    Eigen::VectorXd alpha;
    Eigen::MatrixXd ata;          // A^T A
    Eigen::MatrixXd ata_inverse;  // (A^T A)^-1, maintained by Sherman-Morrison
    Eigen::VectorXd aty;          // A^T y
    double lambda = 1e-6;

    static KrlsState init(double lambda = 1e-6);
};

/// One ALD-KRLS step. If `admitted`, the dictionary must already contain
/// the new node (appended last) and `ald` is the result computed against
/// the dictionary before admission.
void krls_step(KrlsState& state, const Dictionary& dict,
               const Eigen::VectorXd& x, double y, bool admitted,
               const AldResult& ald);

/// Exact regularized solution implied by the current bookkeeping.
Eigen::VectorXd krls_solve(const KrlsState& state, const Dictionary& dict);

// Multi-innovation RLS with forgetting: the latest p (kernel vector,
// output) innovations drive each update.
struct MrlsState {
    Eigen::VectorXd alpha;
    Eigen::MatrixXd P;
    double beta = 1.0;   // forgetting factor in (0, 1]
    int p = 1;           // innovation window length
    std::deque<std::pair<Eigen::VectorXd, double>> window;

    static MrlsState init(int m, double beta = 1.0, int p = 1,
                          double delta = 1e-3);
};

/// Returns the prediction error of the newest sample (before the update).
/// Throws std::runtime_error on a singular innovation matrix; the state is
/// left unchanged in that case.
double mrls_step(MrlsState& state, const Eigen::VectorXd& kvec, double y);

// Gradient descent on the full derivative of e_n^2, with a recurrent term
// through input components that are fed-back past predictions
// (one-step memory).
struct RecurrentGradState {
    Eigen::VectorXd alpha;
    double eta = 0.01;
    Eigen::MatrixXd lambda_rec;      // hyperparameter matrix, scalar * I by default
    std::vector<int> feedback_lags;  // indices of x that are past outputs
    Eigen::VectorXd prev_kvec;       // one-step memory, empty before first step

    static RecurrentGradState init(int m, double eta,
                                   double lambda_scale = 0.01,
                                   std::vector<int> feedback_lags = {});
};

void recurrent_grad_step(RecurrentGradState& state, const Dictionary& dict,
                         const Eigen::VectorXd& x, double y);

// Exponentially weighted linear RLS for cascade stages.
struct LinearRlsState {
    Eigen::VectorXd theta;
    Eigen::MatrixXd P;
    double beta2 = 1.0;

    static LinearRlsState init(int p_r, double beta2 = 1.0,
                               double delta = 1e-3);
};

/// Returns the prediction error before the update.
double linear_rls_step(LinearRlsState& state, const Eigen::VectorXd& x,
                       double y);

/// argmin ||y - A w||^2 + lambda ||w||^2 by direct dense solve.
Eigen::VectorXd batch_ls_oracle(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& y, double lambda);

}  // namespace okp
