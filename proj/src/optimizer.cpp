#include "crowdnav/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace crowdnav {

AdadeltaState AdadeltaState::like(const NamedTensors& params) {
    AdadeltaState s;
    s.avg_sq_grad = NamedTensors::zeros_like(params);
    s.avg_sq_update = NamedTensors::zeros_like(params);
    return s;
}

void adadelta_step(NamedTensors& params, const NamedTensors& grads, AdadeltaState& state,
                   double l2_weight) {
    auto& ps = params.items();
    const auto& gs = grads.items();
    if (ps.size() != gs.size()) throw std::invalid_argument("adadelta: parameter/gradient mismatch");
    const double rho = state.rho;
    const double eps = state.eps;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i].name != gs[i].name || !ps[i].tensor.same_shape(gs[i].tensor))
            throw std::invalid_argument("adadelta: parameter/gradient mismatch at " + ps[i].name);
        if (!ps[i].trainable) continue;  // running moments are statistics, not weights
        auto& p = ps[i].tensor.data;
        const auto& gr = gs[i].tensor.data;
        auto& eg2 = state.avg_sq_grad.items()[i].tensor.data;
        auto& ex2 = state.avg_sq_update.items()[i].tensor.data;
        const std::size_t n = p.size();
#pragma omp parallel for schedule(static) if (n > 1u << 15)
        for (std::size_t k = 0; k < n; ++k) {
            const double g = gr[k] + l2_weight * p[k];
            eg2[k] = rho * eg2[k] + (1.0 - rho) * g * g;
            const double dx = -std::sqrt(ex2[k] + eps) / std::sqrt(eg2[k] + eps) * g;
            ex2[k] = rho * ex2[k] + (1.0 - rho) * dx * dx;
            p[k] += dx;  // learning rate 1
        }
    }
}

}  // namespace crowdnav
