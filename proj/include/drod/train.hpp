#ifndef DROD_TRAIN_HPP
#define DROD_TRAIN_HPP

#include "drod/gradients.hpp"

// Plain SGD over randomly windowed horizon-length segments. Positive scalars
// (twist moduli, masses) are updated through a softplus reparameterization so
// the step cannot leave the feasible set; bend moduli are symmetrized and
// eigenvalue-floored after each update.

namespace drod {

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double eval_loss = 0.0;
    double grad_norm = 0.0;
};

struct TrainResult {
    MaterialParams params;
    ResidualNet net;
    std::vector<EpochStats> history;
    bool diverged = false;
};

// `eval_set` defaults to the training set when null. Deterministic under a
// fixed config seed. Aborts early (diverged = true) when the train loss stays
// above 10x the initial loss for three consecutive epochs.
TrainResult train(const std::vector<Trajectory> &dataset,
                  const MaterialParams &params0, const ResidualNet &net0,
                  const TrainConfig &cfg, const StepConfig &step_cfg,
                  const std::vector<Trajectory> *eval_set = nullptr);

// softplus(x) = log(1 + e^x) and its inverse, used by the reparameterization.
double softplus(double x);
double softplus_inverse(double y);

} // namespace drod

#endif
