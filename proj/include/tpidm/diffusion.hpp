#ifndef TPIDM_DIFFUSION_HPP
#define TPIDM_DIFFUSION_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tpidm/lstm.hpp"
#include "tpidm/rng.hpp"

namespace tpidm {

// Variance schedule: sigma_t plays the per-step variance role,
// alpha_t = 1 - sigma_t, abar_t = prod_{s<=t} alpha_s. Arrays are indexed by
// t-1 (t in 1..T).
struct NoiseSchedule {
    int T = 0;
    std::vector<double> sigma, alpha, alpha_bar;

    double abar(int t) const { return alpha_bar[t - 1]; }
    double sig(int t) const { return sigma[t - 1]; }
    double a(int t) const { return alpha[t - 1]; }
    // Posterior variance of q(x_{t-1} | x_t, x_0), 2 <= t <= T.
    double posterior_var(int t) const {
        return (1.0 - alpha_bar[t - 2]) / (1.0 - alpha_bar[t - 1]) * sigma[t - 1];
    }
};

// Inclusive-endpoint linear interpolation from sigma1 to sigmaT.
NoiseSchedule make_linear_schedule(int T, double sigma1, double sigmaT);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
std::vector<double> forward_sample(std::span<const double> x0, int t,
                                   std::span<const double> eps, const NoiseSchedule& sched);

// x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
std::vector<double> reconstruct_x0(std::span<const double> x_t, int t,
                                   std::span<const double> eps_hat, const NoiseSchedule& sched);

struct GaussianPosterior {
    std::vector<double> mean;
    double variance = 0.0;
};
// Parameters of q(x_{t-1} | x_t, x_0); requires 2 <= t <= T.
GaussianPosterior posterior_q(std::span<const double> x_t, std::span<const double> x0,
                              int t, const NoiseSchedule& sched);

// Per-element draws made by simplified_loss, reused by the physics loss.
struct LossDraws {
    std::vector<int> t;
    std::vector<std::vector<double>> eps;
};

struct DiffusionConfig {
    int T = 100;
    Parameterization mode = Parameterization::Epsilon;
    // ELBO estimator: include every `elbo_stride`-th reverse KL term (1 =
    // full sum), each scaled to keep the total an estimate of the full sum.
    int elbo_stride = 1;
};

// Mean over the batch of per-window squared prediction errors:
// ||eps - eps_theta(x_t, t)||^2 in epsilon mode, ||x0 - x_theta(x_t, t)||^2
// in x0 mode. The (t, eps) draws are returned for reuse.
double simplified_loss(const std::vector<std::vector<double>>& batch_x0,
                       const DenoiserModel& model, const NoiseSchedule& sched,
                       Rng& rng, LossDraws* draws = nullptr);

// Model's estimate of x0 from (x_t, t) under its parameterization mode.
std::vector<double> predict_x0(const DenoiserModel& model, std::span<const double> x_t,
                               int t, const NoiseSchedule& sched);

// Deterministic negative-ELBO estimate: L_T + sum_{t=2..T} KL-terms + L_0
// (Gaussian likelihood with variance sigma_1). Lower = better fit. Reported
// as a per-window sum over dimensions.
double elbo(std::span<const double> x0, const DenoiserModel& model,
            const NoiseSchedule& sched, std::uint64_t seed, int stride = 1);

// Same estimator with the reverse mean supplied by a callback; lets tests run
// oracle models. `reverse_x0(x_t, t)` returns the model's x0 estimate.
double elbo_with(std::span<const double> x0, const NoiseSchedule& sched, std::uint64_t seed,
                 int stride,
                 const std::function<std::vector<double>(std::span<const double>, int)>& reverse_x0);

// Ancestral sampling of n windows; deterministic given seed.
std::vector<std::vector<double>> sample(const DenoiserModel& model, const NoiseSchedule& sched,
                                        int n, std::uint64_t seed);

}  // namespace tpidm

#endif
