#ifndef TPIDM_ADAM_HPP
#define TPIDM_ADAM_HPP

#include <cstdint>
#include <vector>

#include "tpidm/common.hpp"

namespace tpidm {

struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double l2 = 1e-6;  // decoupled weight shrinkage, applied after the Adam step

    explicit AdamState(std::size_t n, double lr_ = 1e-4, double l2_ = 1e-6)
        : m(n, 0.0), v(n, 0.0), lr(lr_), l2(l2_) {}
};

// Bias-corrected Adam update followed by decoupled L2 shrinkage
// (theta -= lr * l2 * theta). Deterministic for identical inputs.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state);

}  // namespace tpidm

#endif
