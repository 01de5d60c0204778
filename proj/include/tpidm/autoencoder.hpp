#ifndef TPIDM_AUTOENCODER_HPP
#define TPIDM_AUTOENCODER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tpidm/lstm.hpp"
#include "tpidm/timeseries.hpp"

namespace tpidm {

struct BaselineTrainConfig {
    int epochs = 30;
    int batch = 128;
    double lr = 1e-4;
    double l2 = 1e-6;
    std::size_t windows_per_epoch = 0;  // 0 = all
    std::uint64_t seed = 1;
};

// Reconstruction autoencoder with the same LSTM encoder-decoder stacks as
// the denoiser, minus the diffusion-step channel.
struct AutoencoderModel {
    int channels = 2;
    int window_len = 100;
    std::vector<LstmSpec> enc, dec;
    std::vector<double> params;
    bool trained = false;
};

AutoencoderModel init_autoencoder(int channels, int window_len,
                                  const std::vector<int>& enc_hidden,
                                  const std::vector<int>& dec_hidden, std::uint64_t seed);
std::vector<double> ae_reconstruct(const AutoencoderModel& model, std::span<const double> window);
void train_autoencoder(AutoencoderModel& model, const WindowSet& train,
                       const BaselineTrainConfig& cfg);
// Mean squared reconstruction error.
double ae_score(std::span<const double> window, const AutoencoderModel& model);

// Variational autoencoder: linear mean / log-variance heads over the latent,
// reparameterized sampling, KL weight 1.
struct VaeModel {
    int channels = 2;
    int window_len = 100;
    int latent = 32;
    std::vector<LstmSpec> enc, dec;
    std::size_t w_mean = 0, b_mean = 0, w_logvar = 0, b_logvar = 0;
    std::vector<double> params;
    bool trained = false;
};

VaeModel init_vae(int channels, int window_len, const std::vector<int>& enc_hidden,
                  const std::vector<int>& dec_hidden, std::uint64_t seed);
void train_vae(VaeModel& model, const WindowSet& train, const BaselineTrainConfig& cfg);

struct VaeForward {
    std::vector<double> mean, logvar, z, recon;
};
VaeForward vae_forward(const VaeModel& model, std::span<const double> window,
                       std::span<const double> eps);

// Negative ELBO: unit-variance Gaussian reconstruction term plus analytic
// KL(q(z|x) || N(0, I)), reparameterized with a seeded draw.
double vae_score(std::span<const double> window, const VaeModel& model, std::uint64_t seed);

double gaussian_kl_std_normal(std::span<const double> mean, std::span<const double> logvar);

}  // namespace tpidm

#endif
