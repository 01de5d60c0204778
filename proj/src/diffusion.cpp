#include "tpidm/diffusion.hpp"

#include <cmath>
#include <functional>

namespace tpidm {

NoiseSchedule make_linear_schedule(int T, double sigma1, double sigmaT) {
    require(T >= 2, "make_linear_schedule: T must be >= 2");
    require(sigma1 > 0.0 && sigma1 < sigmaT && sigmaT < 1.0,
            "make_linear_schedule: need 0 < sigma1 < sigmaT < 1");
    NoiseSchedule s;
    s.T = T;
    s.sigma.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double sig = sigma1 + (static_cast<double>(t - 1) / (T - 1)) * (sigmaT - sigma1);
        s.sigma[t - 1] = sig;
        s.alpha[t - 1] = 1.0 - sig;
        prod *= s.alpha[t - 1];
        s.alpha_bar[t - 1] = prod;
    }
    return s;
}

std::vector<double> forward_sample(std::span<const double> x0, int t,
                                   std::span<const double> eps, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.T, "forward_sample: t out of range");
    require(x0.size() == eps.size(), "forward_sample: shape mismatch");
    const double sa = std::sqrt(sched.abar(t));
    const double sn = std::sqrt(1.0 - sched.abar(t));
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * eps[i];
    return out;
}

std::vector<double> reconstruct_x0(std::span<const double> x_t, int t,
                                   std::span<const double> eps_hat, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.T, "reconstruct_x0: t out of range");
    require(x_t.size() == eps_hat.size(), "reconstruct_x0: shape mismatch");
    const double sa = std::sqrt(sched.abar(t));
    const double sn = std::sqrt(1.0 - sched.abar(t));
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - sn * eps_hat[i]) / sa;
    return out;
}

GaussianPosterior posterior_q(std::span<const double> x_t, std::span<const double> x0,
                              int t, const NoiseSchedule& sched) {
    require(t >= 2 && t <= sched.T, "posterior_q: requires 2 <= t <= T");
    require(x_t.size() == x0.size(), "posterior_q: shape mismatch");
    const double abar_t = sched.abar(t);
    const double abar_prev = sched.abar(t - 1);
    const double sig_t = sched.sig(t);
    const double coef_x0 = std::sqrt(abar_prev) * sig_t / (1.0 - abar_t);
    const double coef_xt = std::sqrt(sched.a(t)) * (1.0 - abar_prev) / (1.0 - abar_t);
    GaussianPosterior p;
    p.mean.resize(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) p.mean[i] = coef_x0 * x0[i] + coef_xt * x_t[i];
    p.variance = (1.0 - abar_prev) / (1.0 - abar_t) * sig_t;
    return p;
}

double simplified_loss(const std::vector<std::vector<double>>& batch_x0,
                       const DenoiserModel& model, const NoiseSchedule& sched,
                       Rng& rng, LossDraws* draws) {
    require(!batch_x0.empty(), "simplified_loss: empty batch");
    double total = 0.0;
    if (draws) {
        draws->t.clear();
        draws->eps.clear();
    }
    for (const auto& x0 : batch_x0) {
        const int t = static_cast<int>(rng.uniform_int(1, sched.T));
        std::vector<double> eps = rng.normal_vec(x0.size());
        std::vector<double> x_t = forward_sample(x0, t, eps, sched);
        std::vector<double> pred = denoise(model, x_t, t, sched.T);
        const std::vector<double>& target = (model.cfg.mode == Parameterization::Epsilon) ? eps : x0;
        double sq = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = target[i] - pred[i];
            sq += d * d;
        }
        total += sq;
        if (draws) {
            draws->t.push_back(t);
            draws->eps.push_back(std::move(eps));
        }
    }
    return total / static_cast<double>(batch_x0.size());
}

std::vector<double> predict_x0(const DenoiserModel& model, std::span<const double> x_t,
                               int t, const NoiseSchedule& sched) {
    std::vector<double> pred = denoise(model, x_t, t, sched.T);
    if (model.cfg.mode == Parameterization::X0) return pred;
    return reconstruct_x0(x_t, t, pred, sched);
}

double elbo_with(std::span<const double> x0, const NoiseSchedule& sched, std::uint64_t seed,
                 int stride,
                 const std::function<std::vector<double>(std::span<const double>, int)>& reverse_x0) {
    require(stride >= 1, "elbo: stride must be >= 1");
    const std::size_t D = x0.size();
    const int T = sched.T;
    Rng rng(seed);

    // L_T: KL(q(x_T | x0) || N(0, I)), closed form per dimension.
    const double abar_T = sched.abar(T);
    double l_T = 0.0;
    for (std::size_t i = 0; i < D; ++i) l_T += abar_T * x0[i] * x0[i];
    l_T = 0.5 * (l_T + D * ((1.0 - abar_T) - 1.0 - std::log(1.0 - abar_T)));

    // Reverse KL terms: same fixed variance on both sides, so each term is
    // ||posterior mean - model mean||^2 / (2 var). Strided terms are scaled
    // to estimate the full sum.
    double l_mid = 0.0;
    for (int t = 2; t <= T; t += stride) {
        std::vector<double> eps = rng.normal_vec(D);
        std::vector<double> x_t = forward_sample(x0, t, eps, sched);
        GaussianPosterior q = posterior_q(x_t, x0, t, sched);
        std::vector<double> x0_hat = reverse_x0(x_t, t);
        GaussianPosterior p = posterior_q(x_t, x0_hat, t, sched);
        double sq = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double d = q.mean[i] - p.mean[i];
            sq += d * d;
        }
        l_mid += static_cast<double>(stride) * sq / (2.0 * q.variance);
    }

    // L_0: negative Gaussian log-likelihood of x0 under the t=1 reconstruction
    // with variance sigma_1.
    {
        std::vector<double> eps = rng.normal_vec(D);
        std::vector<double> x_1 = forward_sample(x0, 1, eps, sched);
        std::vector<double> x0_hat = reverse_x0(x_1, 1);
        const double var = sched.sig(1);
        double sq = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double d = x0[i] - x0_hat[i];
            sq += d * d;
        }
        const double l_0 = 0.5 * (sq / var + D * std::log(2.0 * M_PI * var));
        return l_T + l_mid + l_0;
    }
}

double elbo(std::span<const double> x0, const DenoiserModel& model,
            const NoiseSchedule& sched, std::uint64_t seed, int stride) {
    return elbo_with(x0, sched, seed, stride,
                     [&](std::span<const double> x_t, int t) {
                         return predict_x0(model, x_t, t, sched);
                     });
}

std::vector<std::vector<double>> sample(const DenoiserModel& model, const NoiseSchedule& sched,
                                        int n, std::uint64_t seed) {
    require(n >= 0, "sample: n must be non-negative");
    const std::size_t D =
        static_cast<std::size_t>(model.cfg.window_len) * model.cfg.channels;
    std::vector<std::vector<double>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::vector<double> x = rng.normal_vec(D);
        for (int t = sched.T; t >= 2; --t) {
            std::vector<double> x0_hat = predict_x0(model, x, t, sched);
            GaussianPosterior p = posterior_q(x, x0_hat, t, sched);
            const double sd = std::sqrt(p.variance);
            for (std::size_t j = 0; j < D; ++j) x[j] = p.mean[j] + sd * rng.normal();
        }
        x = predict_x0(model, x, 1, sched);
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace tpidm
