#pragma once

#include <string>
#include <vector>

#include "dartkit/features.hpp"

namespace dartkit {

// INC trades monetize negative DART spikes, DEC trades positive ones; each
// side gets its own classifier per zone.
enum class Side { INC, DEC };

std::string to_string(Side s);
Side parse_side(const std::string& s);

inline int label_of(const LabeledObservation& o, Side s) {
    return s == Side::INC ? o.y_neg : o.y_pos;
}

// Unit edge in $/MWh realized by a 1 MWh trade on this side.
inline double unit_edge(double dart, Side s) { return s == Side::INC ? -dart : dart; }

struct TrainMeta {
    int iterations = 0;
    double final_loss = 0.0;
    bool converged = false;
    std::size_t n_train = 0;
};

// Per-zone, per-side logistic spike model. beta[0] is the intercept; the
// remaining coordinates align with the feature columns.
struct SpikeModel {
    std::string zone;
    Side side = Side::INC;
    std::vector<double> beta;
    double gamma = 0.0;  // spike threshold used for this model's labels
    double tau = 0.5;    // probability cutoff; a signal fires iff p >= tau
    TrainMeta meta;
};

// Numerically stable for |u| well past 700.
double sigmoid(double u);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> gradient;  // same length as beta
};

// Summed (not averaged) cross-entropy with its exact analytic gradient.
// `data` must already be restricted to the model's zone.
LossGrad cross_entropy_loss(const std::vector<double>& beta,
                            const std::vector<LabeledObservation>& data, Side side,
                            double l2 = 0.0);

struct FitOptions {
    double tol = 1e-6;     // gradient infinity-norm stopping rule
    int max_iters = 5000;
    double l2 = 0.0;
};

// Full-batch gradient descent with backtracking line search from beta = 0.
SpikeModel fit(const std::vector<LabeledObservation>& train, Side side,
               const FitOptions& options = {});

double predict(const SpikeModel& model, const std::vector<double>& x);

struct TuneResult {
    double gamma = 0.0;
    double tau = 0.0;
    double pnl = 0.0;
    SpikeModel model;
};

// Grid search maximizing unit-size validation P&L. Each gamma candidate
// relabels the training data from realized_dart and refits; ties break
// toward larger tau, then larger gamma (fewer trades).
TuneResult tune_thresholds(const std::vector<LabeledObservation>& train,
                           const std::vector<LabeledObservation>& validation, Side side,
                           const std::vector<double>& gamma_grid,
                           const std::vector<double>& tau_grid, const FitOptions& options = {});

void save_model(const std::string& path, const SpikeModel& model);
SpikeModel load_model(const std::string& path);

}  // namespace dartkit
