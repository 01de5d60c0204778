#include "tpidm/adam.hpp"

#include <cmath>

namespace tpidm {

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state) {
    require(params.size() == grads.size(), "adam_step: params/grads size mismatch");
    require(params.size() == state.m.size() && params.size() == state.v.size(),
            "adam_step: state size mismatch");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double gi = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * gi;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * gi * gi;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        params[i] -= state.lr * state.l2 * params[i];
    }
}

}  // namespace tpidm
