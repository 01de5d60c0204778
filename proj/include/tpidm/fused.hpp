#ifndef TPIDM_FUSED_HPP
#define TPIDM_FUSED_HPP

#include <span>
#include <vector>

#include "tpidm/lstm.hpp"

namespace tpidm {

// Activation cache for one LSTM layer over a whole sequence; everything the
// backward pass needs to replay the cell equations in reverse.
struct LayerCache {
    int L = 0, input = 0, hidden = 0;
    std::vector<double> x;        // L x input, as fed to this layer
    std::vector<double> ig, fg, gg, og;  // post-activation gates, L x hidden
    std::vector<double> c;        // cell states, L x hidden
    std::vector<double> h;        // hidden states before any inter-layer SiLU
};

struct DenoiserCache {
    std::vector<LayerCache> enc, dec;
    std::vector<double> latent;
    std::vector<double> pred;     // L x C time-major
    // scratch reused across calls
    std::vector<double> dh, dc, dz, dx, dlatent;
};

// Same computation as denoise(), caching activations for denoise_bwd().
const std::vector<double>& denoise_fwd(const DenoiserModel& model, std::span<const double> x_t,
                                       int t, int T, DenoiserCache& cache);

// Backpropagates dL/dpred through the cached forward pass, accumulating
// scale * dL/dparam into grad_out (flat model layout). Gradients match the
// tape path; this exists because the training loop is the hot path.
void denoise_bwd(const DenoiserModel& model, DenoiserCache& cache, std::span<const double> dpred,
                 double scale, std::vector<double>& grad_out);

// ---- batched fast path ------------------------------------------------------
// Processes B windows together with activations laid out lane-minor:
// element (step, feature, lane) lives at (step * F + feature) * B + lane.
// Per-lane arithmetic follows the exact operation order of the single-window
// path, so forward activations and predictions match it bit-for-bit. Weight
// gradients are reduced across lanes (per step, lane-order sums), which
// reassociates the floating-point total relative to adding whole windows one
// after another but stays fully deterministic.

struct BatchLayerCache {
    int L = 0, input = 0, hidden = 0, lanes = 0;
    std::vector<double> x;               // L x input x lanes
    std::vector<double> ig, fg, gg, og;  // post-activation gates, L x hidden x lanes
    std::vector<double> c;               // cell states
    std::vector<double> h;               // hidden states before inter-layer SiLU
};

struct BatchDenoiserCache {
    int lanes = 0;
    std::vector<BatchLayerCache> enc, dec;
    std::vector<double> pred;  // L x C x lanes
    // scratch reused across calls
    std::vector<double> dh, dx, dz;
};

// x_t[b] points at the b-th window (L x C time-major); t[b] is its diffusion
// step. Returns cache.pred in the lane-minor layout above.
const std::vector<double>& denoise_fwd_batch(const DenoiserModel& model,
                                             const std::vector<const double*>& x_t,
                                             const std::vector<int>& t, int T,
                                             BatchDenoiserCache& cache);

// dpred uses the same L x C x lanes layout as cache.pred.
void denoise_bwd_batch(const DenoiserModel& model, BatchDenoiserCache& cache,
                       std::span<const double> dpred, double scale,
                       std::vector<double>& grad_out);

}  // namespace tpidm

#endif
