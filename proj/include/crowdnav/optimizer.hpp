#pragma once

#include "crowdnav/tensor.hpp"

namespace crowdnav {

// Adadelta accumulators (Zeiler 2012): decaying averages of squared
// gradients and squared updates per parameter entry.
struct AdadeltaState {
    double rho = 0.95;
    double eps = 1e-6;
    NamedTensors avg_sq_grad;
    NamedTensors avg_sq_update;

    static AdadeltaState like(const NamedTensors& params);
};

// In-place Adadelta update with learning rate 1 applied to
// grads + l2_weight * params. Non-trainable tensors (batch-norm running
// moments) are left untouched.
void adadelta_step(NamedTensors& params, const NamedTensors& grads, AdadeltaState& state,
                   double l2_weight);

}  // namespace crowdnav
