#include "tpidm/autoencoder.hpp"

#include <cmath>
#include <numeric>

#include "tpidm/adam.hpp"
#include "tpidm/rng.hpp"

namespace tpidm {

namespace {

std::vector<std::vector<double>> window_steps(std::span<const double> window, int L, int C) {
    std::vector<std::vector<double>> steps(L, std::vector<double>(C));
    for (int i = 0; i < L; ++i)
        for (int c = 0; c < C; ++c) steps[i][c] = window[static_cast<std::size_t>(i) * C + c];
    return steps;
}

std::vector<double> flatten_seq(const std::vector<std::vector<double>>& seq, int C) {
    std::vector<double> out(seq.size() * C);
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (int c = 0; c < C; ++c) out[i * C + c] = seq[i][c];
    return out;
}

// Epoch order over training windows, optionally subsampled.
std::vector<std::size_t> epoch_order(std::size_t n, std::size_t cap, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    if (cap > 0 && cap < n) idx.resize(cap);
    return idx;
}

}  // namespace

AutoencoderModel init_autoencoder(int channels, int window_len,
                                  const std::vector<int>& enc_hidden,
                                  const std::vector<int>& dec_hidden, std::uint64_t seed) {
    require(dec_hidden.back() == channels, "init_autoencoder: decoder must end at channel count");
    AutoencoderModel m;
    m.channels = channels;
    m.window_len = window_len;
    std::size_t offset = 0;
    std::vector<int> enc_in{channels};
    for (std::size_t i = 1; i < enc_hidden.size(); ++i) enc_in.push_back(enc_hidden[i - 1]);
    m.enc = layout_lstm_stack(enc_in, enc_hidden, offset);
    std::vector<int> dec_in{enc_hidden.back()};
    for (std::size_t i = 1; i < dec_hidden.size(); ++i) dec_in.push_back(dec_hidden[i - 1]);
    m.dec = layout_lstm_stack(dec_in, dec_hidden, offset);
    m.params.assign(offset, 0.0);
    init_lstm_stack(m.enc, seed, m.params);
    init_lstm_stack(m.dec, splitmix64(seed), m.params);
    return m;
}

std::vector<double> ae_reconstruct(const AutoencoderModel& model, std::span<const double> window) {
    const int L = model.window_len, C = model.channels;
    require(static_cast<int>(window.size()) == L * C, "ae_reconstruct: window size mismatch");
    std::vector<double> latent;
    run_stack(model.enc, model.params, window_steps(window, L, C), &latent);
    auto out = run_stack(model.dec, model.params, std::vector<std::vector<double>>(L, latent));
    return flatten_seq(out, C);
}

void train_autoencoder(AutoencoderModel& model, const WindowSet& train,
                       const BaselineTrainConfig& cfg) {
    require(!train.windows.empty(), "train_autoencoder: no training windows");
    const int L = model.window_len, C = model.channels;
    Rng rng(cfg.seed);
    AdamState opt(model.params.size(), cfg.lr, cfg.l2);
    std::vector<double> gradsum(model.params.size());
    Tape tape;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_order(train.windows.size(), cfg.windows_per_epoch, rng);
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch) {
            const std::size_t bend = std::min(pos + cfg.batch, order.size());
            std::fill(gradsum.begin(), gradsum.end(), 0.0);
            const double scale = 1.0 / static_cast<double>(bend - pos);
            for (std::size_t bi = pos; bi < bend; ++bi) {
                const auto& w = train.windows[order[bi]];
                tape.clear();
                StackTapeParams enc_p = bind_stack_params(tape, model.enc, model.params);
                StackTapeParams dec_p = bind_stack_params(tape, model.dec, model.params);
                std::vector<NodeId> in(L);
                auto steps = window_steps(w, L, C);
                for (int i = 0; i < L; ++i) in[i] = tape.leaf(steps[i]);
                NodeId latent = -1;
                run_stack_tape(tape, model.enc, enc_p, in, &latent);
                auto out_seq = run_stack_tape(tape, model.dec, dec_p,
                                              std::vector<NodeId>(L, latent));
                NodeId recon = tape.concat(out_seq);
                std::vector<double> neg(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) neg[i] = -w[i];
                NodeId loss = tape.sum_sq(tape.add(recon, tape.leaf(neg)));
                tape.backward(loss);
                accumulate_stack_grads(tape, model.enc, enc_p, scale, gradsum);
                accumulate_stack_grads(tape, model.dec, dec_p, scale, gradsum);
            }
            adam_step(model.params, gradsum, opt);
        }
    }
    model.trained = true;
}

double ae_score(std::span<const double> window, const AutoencoderModel& model) {
    require(model.trained, "ae_score: model is untrained");
    const auto recon = ae_reconstruct(model, window);
    double s = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const double d = window[i] - recon[i];
        s += d * d;
    }
    return s / static_cast<double>(window.size());
}

VaeModel init_vae(int channels, int window_len, const std::vector<int>& enc_hidden,
                  const std::vector<int>& dec_hidden, std::uint64_t seed) {
    require(dec_hidden.back() == channels, "init_vae: decoder must end at channel count");
    VaeModel m;
    m.channels = channels;
    m.window_len = window_len;
    m.latent = enc_hidden.back();
    std::size_t offset = 0;
    std::vector<int> enc_in{channels};
    for (std::size_t i = 1; i < enc_hidden.size(); ++i) enc_in.push_back(enc_hidden[i - 1]);
    m.enc = layout_lstm_stack(enc_in, enc_hidden, offset);
    std::vector<int> dec_in{m.latent};
    for (std::size_t i = 1; i < dec_hidden.size(); ++i) dec_in.push_back(dec_hidden[i - 1]);
    m.dec = layout_lstm_stack(dec_in, dec_hidden, offset);
    const std::size_t head = static_cast<std::size_t>(m.latent) * m.latent;
    m.w_mean = offset; offset += head;
    m.b_mean = offset; offset += m.latent;
    m.w_logvar = offset; offset += head;
    m.b_logvar = offset; offset += m.latent;
    m.params.assign(offset, 0.0);
    init_lstm_stack(m.enc, seed, m.params);
    init_lstm_stack(m.dec, splitmix64(seed), m.params);
    Rng rng(splitmix64(splitmix64(seed)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.latent));
    for (std::size_t i = m.w_mean; i < m.params.size(); ++i)
        m.params[i] = rng.uniform(-bound, bound);
    return m;
}

double gaussian_kl_std_normal(std::span<const double> mean, std::span<const double> logvar) {
    double kl = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i)
        kl += 0.5 * (mean[i] * mean[i] + std::exp(logvar[i]) - 1.0 - logvar[i]);
    return kl;
}

VaeForward vae_forward(const VaeModel& model, std::span<const double> window,
                       std::span<const double> eps) {
    const int L = model.window_len, C = model.channels, Z = model.latent;
    require(static_cast<int>(window.size()) == L * C, "vae_forward: window size mismatch");
    require(static_cast<int>(eps.size()) == Z, "vae_forward: eps size mismatch");
    std::vector<double> h;
    run_stack(model.enc, model.params, window_steps(window, L, C), &h);
    VaeForward f;
    f.mean.resize(Z);
    f.logvar.resize(Z);
    const double* wm = model.params.data() + model.w_mean;
    const double* bm = model.params.data() + model.b_mean;
    const double* wl = model.params.data() + model.w_logvar;
    const double* bl = model.params.data() + model.b_logvar;
    for (int r = 0; r < Z; ++r) {
        double am = bm[r], al = bl[r];
        for (int j = 0; j < Z; ++j) {
            am += wm[static_cast<std::size_t>(r) * Z + j] * h[j];
            al += wl[static_cast<std::size_t>(r) * Z + j] * h[j];
        }
        f.mean[r] = am;
        f.logvar[r] = al;
        if (!std::isfinite(al)) throw numeric_error("vae_forward: non-finite log-variance");
    }
    f.z.resize(Z);
    for (int r = 0; r < Z; ++r) f.z[r] = f.mean[r] + std::exp(0.5 * f.logvar[r]) * eps[r];
    auto out = run_stack(model.dec, model.params, std::vector<std::vector<double>>(L, f.z));
    f.recon = flatten_seq(out, C);
    return f;
}

void train_vae(VaeModel& model, const WindowSet& train, const BaselineTrainConfig& cfg) {
    require(!train.windows.empty(), "train_vae: no training windows");
    const int L = model.window_len, C = model.channels, Z = model.latent;
    Rng rng(cfg.seed);
    AdamState opt(model.params.size(), cfg.lr, cfg.l2);
    std::vector<double> gradsum(model.params.size());
    Tape tape;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_order(train.windows.size(), cfg.windows_per_epoch, rng);
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch) {
            const std::size_t bend = std::min(pos + cfg.batch, order.size());
            std::fill(gradsum.begin(), gradsum.end(), 0.0);
            const double scale = 1.0 / static_cast<double>(bend - pos);
            for (std::size_t bi = pos; bi < bend; ++bi) {
                const auto& w = train.windows[order[bi]];
                const auto eps = rng.normal_vec(Z);
                tape.clear();
                StackTapeParams enc_p = bind_stack_params(tape, model.enc, model.params);
                StackTapeParams dec_p = bind_stack_params(tape, model.dec, model.params);
                NodeId wm = tape.param_leaf({model.params.data() + model.w_mean,
                                             static_cast<std::size_t>(Z) * Z});
                NodeId bm = tape.param_leaf({model.params.data() + model.b_mean,
                                             static_cast<std::size_t>(Z)});
                NodeId wl = tape.param_leaf({model.params.data() + model.w_logvar,
                                             static_cast<std::size_t>(Z) * Z});
                NodeId bl = tape.param_leaf({model.params.data() + model.b_logvar,
                                             static_cast<std::size_t>(Z)});
                std::vector<NodeId> in(L);
                auto steps = window_steps(w, L, C);
                for (int i = 0; i < L; ++i) in[i] = tape.leaf(steps[i]);
                NodeId h = -1;
                run_stack_tape(tape, model.enc, enc_p, in, &h);
                NodeId mean = tape.linear(wm, bm, h, Z, Z);
                NodeId logvar = tape.linear(wl, bl, h, Z, Z);
                // z = mean + exp(logvar/2) * eps, via sigma^2 = exp(logvar):
                // exp(x/2) = 1/sqrt... composed from primitives as
                // exp(logvar/2) = silu(a)/sigmoid? Not available; use identity
                // exp(u) = sigmoid(u)/(1-sigmoid(u)) = sigmoid(u)*recip(sigmoid(-u)).
                NodeId halflog = tape.affine(logvar, 0.5, 0.0);
                NodeId sd = tape.mul(tape.sigmoid(halflog),
                                     tape.reciprocal(tape.sigmoid(tape.affine(halflog, -1.0, 0.0))));
                NodeId z = tape.add(mean, tape.mul(sd, tape.leaf(eps)));
                auto out_seq = run_stack_tape(tape, model.dec, dec_p,
                                              std::vector<NodeId>(L, z));
                NodeId recon = tape.concat(out_seq);
                std::vector<double> neg(w.size());
                for (std::size_t i = 0; i < w.size(); ++i) neg[i] = -w[i];
                NodeId rec_loss = tape.affine(tape.sum_sq(tape.add(recon, tape.leaf(neg))), 0.5, 0.0);
                // KL = 0.5 sum(mean^2 + exp(logvar) - 1 - logvar)
                NodeId var = tape.mul(sd, sd);
                NodeId kl_terms = tape.add(tape.sum_sq(mean),
                                           tape.add(tape.affine(tape.mean(var),
                                                                static_cast<double>(Z), 0.0),
                                                    tape.affine(tape.mean(logvar),
                                                                -static_cast<double>(Z),
                                                                -static_cast<double>(Z))));
                NodeId kl = tape.affine(kl_terms, 0.5, 0.0);
                NodeId loss = tape.add(rec_loss, kl);
                tape.backward(loss);
                accumulate_stack_grads(tape, model.enc, enc_p, scale, gradsum);
                accumulate_stack_grads(tape, model.dec, dec_p, scale, gradsum);
                auto acc = [&](NodeId leaf, std::size_t off, std::size_t count) {
                    const auto& g = tape.grad(leaf);
                    if (!g.empty())
                        for (std::size_t i = 0; i < count; ++i) gradsum[off + i] += scale * g[i];
                };
                acc(wm, model.w_mean, static_cast<std::size_t>(Z) * Z);
                acc(bm, model.b_mean, Z);
                acc(wl, model.w_logvar, static_cast<std::size_t>(Z) * Z);
                acc(bl, model.b_logvar, Z);
            }
            adam_step(model.params, gradsum, opt);
        }
    }
    model.trained = true;
}

double vae_score(std::span<const double> window, const VaeModel& model, std::uint64_t seed) {
    require(model.trained, "vae_score: model is untrained");
    Rng rng(seed);
    const auto eps = rng.normal_vec(model.latent);
    const auto f = vae_forward(model, window, eps);
    double rec = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const double d = window[i] - f.recon[i];
        rec += d * d;
    }
    const double D = static_cast<double>(window.size());
    return 0.5 * rec + 0.5 * D * std::log(2.0 * M_PI) +
           gaussian_kl_std_normal(f.mean, f.logvar);
}

}  // namespace tpidm
