#include "tpidm/fused.hpp"

#include <cmath>

namespace tpidm {

namespace {

inline double sigmoid_(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Forward over one layer; lc.x must already hold the layer's input sequence.
void layer_fwd(const LstmSpec& s, const double* params, LayerCache& lc) {
    const int L = lc.L, H = s.hidden, I = s.input, cols = I + H;
    const double* w = params + s.w_off;
    const double* b = params + s.b_off;
    lc.ig.resize(static_cast<std::size_t>(L) * H);
    lc.fg.resize(static_cast<std::size_t>(L) * H);
    lc.gg.resize(static_cast<std::size_t>(L) * H);
    lc.og.resize(static_cast<std::size_t>(L) * H);
    lc.c.resize(static_cast<std::size_t>(L) * H);
    lc.h.resize(static_cast<std::size_t>(L) * H);

    for (int step = 0; step < L; ++step) {
        const double* x = lc.x.data() + static_cast<std::size_t>(step) * I;
        const double* hp = step > 0 ? lc.h.data() + static_cast<std::size_t>(step - 1) * H : nullptr;
        const double* cp = step > 0 ? lc.c.data() + static_cast<std::size_t>(step - 1) * H : nullptr;
        double* ig = lc.ig.data() + static_cast<std::size_t>(step) * H;
        double* fg = lc.fg.data() + static_cast<std::size_t>(step) * H;
        double* gg = lc.gg.data() + static_cast<std::size_t>(step) * H;
        double* og = lc.og.data() + static_cast<std::size_t>(step) * H;
        double* c = lc.c.data() + static_cast<std::size_t>(step) * H;
        double* h = lc.h.data() + static_cast<std::size_t>(step) * H;

        for (int j = 0; j < H; ++j) {
            double z[4];
            for (int g = 0; g < 4; ++g) {
                const int r = g * H + j;
                const double* wr = w + static_cast<std::size_t>(r) * cols;
                double acc = b[r];
                for (int k = 0; k < I; ++k) acc += wr[k] * x[k];
                if (hp)
                    for (int k = 0; k < H; ++k) acc += wr[I + k] * hp[k];
                z[g] = acc;
            }
            ig[j] = sigmoid_(z[0]);
            fg[j] = sigmoid_(z[1]);
            gg[j] = std::tanh(z[2]);
            og[j] = sigmoid_(z[3]);
            const double cprev = cp ? cp[j] : 0.0;
            c[j] = fg[j] * cprev + ig[j] * gg[j];
            h[j] = og[j] * std::tanh(c[j]);
        }
    }
}

// Backward over one layer. dH holds dL/dh per step on entry (external
// contributions only) and is consumed; dX receives dL/d(input) per step.
void layer_bwd(const LstmSpec& s, const double* params, const LayerCache& lc,
               std::vector<double>& dH, std::vector<double>& dX, std::vector<double>& dz_buf,
               double scale, std::vector<double>& grad_out) {
    const int L = lc.L, H = s.hidden, I = s.input, cols = I + H;
    const double* w = params + s.w_off;
    double* gw = grad_out.data() + s.w_off;
    double* gb = grad_out.data() + s.b_off;

    dX.assign(static_cast<std::size_t>(L) * I, 0.0);
    dz_buf.resize(static_cast<std::size_t>(4) * H);
    std::vector<double> dc_rec(H, 0.0);

    for (int step = L - 1; step >= 0; --step) {
        const double* x = lc.x.data() + static_cast<std::size_t>(step) * I;
        const double* hp = step > 0 ? lc.h.data() + static_cast<std::size_t>(step - 1) * H : nullptr;
        const double* cp = step > 0 ? lc.c.data() + static_cast<std::size_t>(step - 1) * H : nullptr;
        const double* ig = lc.ig.data() + static_cast<std::size_t>(step) * H;
        const double* fg = lc.fg.data() + static_cast<std::size_t>(step) * H;
        const double* gg = lc.gg.data() + static_cast<std::size_t>(step) * H;
        const double* og = lc.og.data() + static_cast<std::size_t>(step) * H;
        const double* c = lc.c.data() + static_cast<std::size_t>(step) * H;
        double* dh = dH.data() + static_cast<std::size_t>(step) * H;
        double* dx = dX.data() + static_cast<std::size_t>(step) * I;

        for (int j = 0; j < H; ++j) {
            const double tc = std::tanh(c[j]);
            const double dhj = dh[j];
            double dc = dc_rec[j] + dhj * og[j] * (1.0 - tc * tc);
            const double do_ = dhj * tc;
            const double cprev = cp ? cp[j] : 0.0;
            const double di = dc * gg[j];
            const double df = dc * cprev;
            const double dg = dc * ig[j];
            dc_rec[j] = dc * fg[j];
            dz_buf[j] = di * ig[j] * (1.0 - ig[j]);
            dz_buf[H + j] = df * fg[j] * (1.0 - fg[j]);
            dz_buf[2 * H + j] = dg * (1.0 - gg[j] * gg[j]);
            dz_buf[3 * H + j] = do_ * og[j] * (1.0 - og[j]);
        }

        double* dh_prev = step > 0 ? dH.data() + static_cast<std::size_t>(step - 1) * H : nullptr;
        for (int r = 0; r < 4 * H; ++r) {
            const double dzr = dz_buf[r];
            if (dzr == 0.0) continue;
            const double* wr = w + static_cast<std::size_t>(r) * cols;
            double* gwr = gw + static_cast<std::size_t>(r) * cols;
            for (int k = 0; k < I; ++k) {
                gwr[k] += scale * dzr * x[k];
                dx[k] += wr[k] * dzr;
            }
            if (hp) {
                for (int k = 0; k < H; ++k) {
                    gwr[I + k] += scale * dzr * hp[k];
                    dh_prev[k] += wr[I + k] * dzr;
                }
            }
            gb[r] += scale * dzr;
        }
    }
}

inline double silu_(double u) { return u / (1.0 + std::exp(-u)); }
inline double dsilu_(double u) {
    const double s = sigmoid_(u);
    return s * (1.0 + u * (1.0 - s));
}

// Batched forward over one layer; lc.x must hold the input sequence in the
// lane-minor layout. Per lane this reproduces layer_fwd's arithmetic exactly.
void layer_fwd_b(const LstmSpec& s, const double* params, BatchLayerCache& lc,
                 std::vector<double>& z_buf) {
    const int L = lc.L, H = s.hidden, I = s.input, B = lc.lanes, cols = I + H;
    const double* w = params + s.w_off;
    const double* bias = params + s.b_off;
    const std::size_t HB = static_cast<std::size_t>(H) * B;
    lc.ig.resize(static_cast<std::size_t>(L) * HB);
    lc.fg.resize(static_cast<std::size_t>(L) * HB);
    lc.gg.resize(static_cast<std::size_t>(L) * HB);
    lc.og.resize(static_cast<std::size_t>(L) * HB);
    lc.c.resize(static_cast<std::size_t>(L) * HB);
    lc.h.resize(static_cast<std::size_t>(L) * HB);
    z_buf.resize(static_cast<std::size_t>(4) * B);

    for (int step = 0; step < L; ++step) {
        const double* xs = lc.x.data() + static_cast<std::size_t>(step) * I * B;
        const double* hp = step > 0 ? lc.h.data() + static_cast<std::size_t>(step - 1) * HB
                                    : nullptr;
        const double* cp = step > 0 ? lc.c.data() + static_cast<std::size_t>(step - 1) * HB
                                    : nullptr;
        double* ig = lc.ig.data() + static_cast<std::size_t>(step) * HB;
        double* fg = lc.fg.data() + static_cast<std::size_t>(step) * HB;
        double* gg = lc.gg.data() + static_cast<std::size_t>(step) * HB;
        double* og = lc.og.data() + static_cast<std::size_t>(step) * HB;
        double* c = lc.c.data() + static_cast<std::size_t>(step) * HB;
        double* h = lc.h.data() + static_cast<std::size_t>(step) * HB;

        for (int j = 0; j < H; ++j) {
            for (int g = 0; g < 4; ++g) {
                const int r = g * H + j;
                const double* __restrict__ wr = w + static_cast<std::size_t>(r) * cols;
                double* __restrict__ zg = z_buf.data() + static_cast<std::size_t>(g) * B;
                for (int b = 0; b < B; ++b) zg[b] = bias[r];
                for (int k = 0; k < I; ++k) {
                    const double wk = wr[k];
                    const double* __restrict__ xk = xs + static_cast<std::size_t>(k) * B;
                    for (int b = 0; b < B; ++b) zg[b] += wk * xk[b];
                }
                if (hp) {
                    for (int k = 0; k < H; ++k) {
                        const double wk = wr[I + k];
                        const double* __restrict__ hk = hp + static_cast<std::size_t>(k) * B;
                        for (int b = 0; b < B; ++b) zg[b] += wk * hk[b];
                    }
                }
            }
            const std::size_t jb = static_cast<std::size_t>(j) * B;
            for (int b = 0; b < B; ++b) {
                const double iv = sigmoid_(z_buf[b]);
                const double fv = sigmoid_(z_buf[B + b]);
                const double gv = std::tanh(z_buf[2 * static_cast<std::size_t>(B) + b]);
                const double ov = sigmoid_(z_buf[3 * static_cast<std::size_t>(B) + b]);
                const double cprev = cp ? cp[jb + b] : 0.0;
                const double cv = fv * cprev + iv * gv;
                ig[jb + b] = iv;
                fg[jb + b] = fv;
                gg[jb + b] = gv;
                og[jb + b] = ov;
                c[jb + b] = cv;
                h[jb + b] = ov * std::tanh(cv);
            }
        }
    }
}

// Batched backward over one layer; mirrors layer_bwd with lane-minor buffers.
void layer_bwd_b(const LstmSpec& s, const double* params, const BatchLayerCache& lc,
                 std::vector<double>& dH, std::vector<double>& dX, std::vector<double>& dz_buf,
                 double scale, std::vector<double>& grad_out) {
    const int L = lc.L, H = s.hidden, I = s.input, B = lc.lanes, cols = I + H;
    const double* w = params + s.w_off;
    double* gw = grad_out.data() + s.w_off;
    double* gb = grad_out.data() + s.b_off;
    const std::size_t HB = static_cast<std::size_t>(H) * B;

    dX.assign(static_cast<std::size_t>(L) * I * B, 0.0);
    dz_buf.resize(static_cast<std::size_t>(4) * HB);
    std::vector<double> dc_rec(HB, 0.0);

    for (int step = L - 1; step >= 0; --step) {
        const double* xs = lc.x.data() + static_cast<std::size_t>(step) * I * B;
        const double* hp = step > 0 ? lc.h.data() + static_cast<std::size_t>(step - 1) * HB
                                    : nullptr;
        const double* cp = step > 0 ? lc.c.data() + static_cast<std::size_t>(step - 1) * HB
                                    : nullptr;
        const double* ig = lc.ig.data() + static_cast<std::size_t>(step) * HB;
        const double* fg = lc.fg.data() + static_cast<std::size_t>(step) * HB;
        const double* gg = lc.gg.data() + static_cast<std::size_t>(step) * HB;
        const double* og = lc.og.data() + static_cast<std::size_t>(step) * HB;
        const double* c = lc.c.data() + static_cast<std::size_t>(step) * HB;
        double* dh = dH.data() + static_cast<std::size_t>(step) * HB;
        double* dx = dX.data() + static_cast<std::size_t>(step) * I * B;

        for (int j = 0; j < H; ++j) {
            const std::size_t jb = static_cast<std::size_t>(j) * B;
            for (int b = 0; b < B; ++b) {
                const double tc = std::tanh(c[jb + b]);
                const double dhj = dh[jb + b];
                double dc = dc_rec[jb + b] + dhj * og[jb + b] * (1.0 - tc * tc);
                const double do_ = dhj * tc;
                const double cprev = cp ? cp[jb + b] : 0.0;
                const double di = dc * gg[jb + b];
                const double df = dc * cprev;
                const double dg = dc * ig[jb + b];
                dc_rec[jb + b] = dc * fg[jb + b];
                dz_buf[jb + b] = di * ig[jb + b] * (1.0 - ig[jb + b]);
                dz_buf[HB + jb + b] = df * fg[jb + b] * (1.0 - fg[jb + b]);
                dz_buf[2 * HB + jb + b] = dg * (1.0 - gg[jb + b] * gg[jb + b]);
                dz_buf[3 * HB + jb + b] = do_ * og[jb + b] * (1.0 - og[jb + b]);
            }
        }

        double* dh_prev = step > 0 ? dH.data() + static_cast<std::size_t>(step - 1) * HB
                                   : nullptr;
        for (int r = 0; r < 4 * H; ++r) {
            const double* __restrict__ dzr = dz_buf.data() + static_cast<std::size_t>(r) * B;
            const double* __restrict__ wr = w + static_cast<std::size_t>(r) * cols;
            double* __restrict__ gwr = gw + static_cast<std::size_t>(r) * cols;
            for (int k = 0; k < I; ++k) {
                const double* __restrict__ xk = xs + static_cast<std::size_t>(k) * B;
                double sum = 0.0;
                for (int b = 0; b < B; ++b) sum += dzr[b] * xk[b];
                gwr[k] += scale * sum;
                const double wk = wr[k];
                double* __restrict__ dxk = dx + static_cast<std::size_t>(k) * B;
                for (int b = 0; b < B; ++b) dxk[b] += wk * dzr[b];
            }
            if (hp) {
                for (int k = 0; k < H; ++k) {
                    const double* __restrict__ hk = hp + static_cast<std::size_t>(k) * B;
                    double sum = 0.0;
                    for (int b = 0; b < B; ++b) sum += dzr[b] * hk[b];
                    gwr[I + k] += scale * sum;
                    const double wk = wr[I + k];
                    double* __restrict__ dhk = dh_prev + static_cast<std::size_t>(k) * B;
                    for (int b = 0; b < B; ++b) dhk[b] += wk * dzr[b];
                }
            }
            double sb = 0.0;
            for (int b = 0; b < B; ++b) sb += dzr[b];
            gb[r] += scale * sb;
        }
    }
}

}  // namespace

const std::vector<double>& denoise_fwd(const DenoiserModel& model, std::span<const double> x_t,
                                       int t, int T, DenoiserCache& cache) {
    const int L = model.cfg.window_len;
    const int C = model.cfg.channels;
    require(t >= 1 && t <= T, "denoise_fwd: diffusion step out of range");
    require(static_cast<int>(x_t.size()) == L * C, "denoise_fwd: window size mismatch");

    cache.enc.resize(model.enc.size());
    cache.dec.resize(model.dec.size());

    // encoder input: [x_t ; t/T] per step
    {
        LayerCache& lc = cache.enc[0];
        lc.L = L;
        lc.input = model.enc[0].input;
        lc.hidden = model.enc[0].hidden;
        lc.x.resize(static_cast<std::size_t>(L) * (C + 1));
        const double tcond = static_cast<double>(t) / static_cast<double>(T);
        for (int i = 0; i < L; ++i) {
            for (int ch = 0; ch < C; ++ch)
                lc.x[static_cast<std::size_t>(i) * (C + 1) + ch] =
                    x_t[static_cast<std::size_t>(i) * C + ch];
            lc.x[static_cast<std::size_t>(i) * (C + 1) + C] = tcond;
        }
    }
    for (std::size_t layer = 0; layer < model.enc.size(); ++layer) {
        LayerCache& lc = cache.enc[layer];
        lc.L = L;
        lc.input = model.enc[layer].input;
        lc.hidden = model.enc[layer].hidden;
        layer_fwd(model.enc[layer], model.params.data(), lc);
        if (layer + 1 < model.enc.size()) {
            LayerCache& up = cache.enc[layer + 1];
            up.x.resize(lc.h.size());
            for (std::size_t i = 0; i < lc.h.size(); ++i) up.x[i] = silu_(lc.h[i]);
        }
    }
    const int latent_sz = model.enc.back().hidden;
    cache.latent.assign(cache.enc.back().h.end() - latent_sz, cache.enc.back().h.end());

    // decoder input: the encoder's top-layer state sequence, step-aligned
    {
        LayerCache& lc = cache.dec[0];
        lc.L = L;
        lc.input = model.dec[0].input;
        lc.hidden = model.dec[0].hidden;
        lc.x = cache.enc.back().h;
    }
    for (std::size_t layer = 0; layer < model.dec.size(); ++layer) {
        LayerCache& lc = cache.dec[layer];
        lc.L = L;
        lc.input = model.dec[layer].input;
        lc.hidden = model.dec[layer].hidden;
        layer_fwd(model.dec[layer], model.params.data(), lc);
        if (layer + 1 < model.dec.size()) {
            LayerCache& up = cache.dec[layer + 1];
            up.x.resize(lc.h.size());
            for (std::size_t i = 0; i < lc.h.size(); ++i) up.x[i] = silu_(lc.h[i]);
        }
    }
    cache.pred = cache.dec.back().h;  // top decoder hidden width == C, time-major
    return cache.pred;
}

void denoise_bwd(const DenoiserModel& model, DenoiserCache& cache, std::span<const double> dpred,
                 double scale, std::vector<double>& grad_out) {
    require(dpred.size() == cache.pred.size(), "denoise_bwd: dpred size mismatch");
    require(grad_out.size() == model.params.size(), "denoise_bwd: grad buffer size mismatch");

    std::vector<double>& dh = cache.dh;
    std::vector<double>& dx = cache.dx;
    std::vector<double>& dz = cache.dz;

    // decoder, top down
    dh.assign(dpred.begin(), dpred.end());
    for (std::size_t layer = model.dec.size(); layer-- > 0;) {
        layer_bwd(model.dec[layer], model.params.data(), cache.dec[layer], dh, dx, dz, scale,
                  grad_out);
        if (layer > 0) {
            const LayerCache& below = cache.dec[layer - 1];
            dh.resize(below.h.size());
            for (std::size_t i = 0; i < below.h.size(); ++i) dh[i] = dx[i] * dsilu_(below.h[i]);
        }
    }
    // the decoder reads the encoder's top-layer states directly, so its input
    // gradient flows step-aligned into the encoder's top layer
    dh = dx;
    for (std::size_t layer = model.enc.size(); layer-- > 0;) {
        layer_bwd(model.enc[layer], model.params.data(), cache.enc[layer], dh, dx, dz, scale,
                  grad_out);
        if (layer > 0) {
            const LayerCache& below = cache.enc[layer - 1];
            dh.resize(below.h.size());
            for (std::size_t i = 0; i < below.h.size(); ++i) dh[i] = dx[i] * dsilu_(below.h[i]);
        }
    }
}

const std::vector<double>& denoise_fwd_batch(const DenoiserModel& model,
                                             const std::vector<const double*>& x_t,
                                             const std::vector<int>& t, int T,
                                             BatchDenoiserCache& cache) {
    const int L = model.cfg.window_len;
    const int C = model.cfg.channels;
    const int B = static_cast<int>(x_t.size());
    require(B > 0 && t.size() == x_t.size(), "denoise_fwd_batch: lane count mismatch");
    for (int tv : t) require(tv >= 1 && tv <= T, "denoise_fwd_batch: diffusion step out of range");

    cache.lanes = B;
    cache.enc.resize(model.enc.size());
    cache.dec.resize(model.dec.size());

    // encoder input: [x_t ; t/T] per step, per lane
    {
        BatchLayerCache& lc = cache.enc[0];
        lc.L = L;
        lc.input = model.enc[0].input;
        lc.hidden = model.enc[0].hidden;
        lc.lanes = B;
        lc.x.resize(static_cast<std::size_t>(L) * (C + 1) * B);
        for (int b = 0; b < B; ++b) {
            const double tcond = static_cast<double>(t[b]) / static_cast<double>(T);
            const double* src = x_t[b];
            for (int i = 0; i < L; ++i) {
                for (int ch = 0; ch < C; ++ch)
                    lc.x[(static_cast<std::size_t>(i) * (C + 1) + ch) * B + b] =
                        src[static_cast<std::size_t>(i) * C + ch];
                lc.x[(static_cast<std::size_t>(i) * (C + 1) + C) * B + b] = tcond;
            }
        }
    }
    for (std::size_t layer = 0; layer < model.enc.size(); ++layer) {
        BatchLayerCache& lc = cache.enc[layer];
        lc.L = L;
        lc.input = model.enc[layer].input;
        lc.hidden = model.enc[layer].hidden;
        lc.lanes = B;
        layer_fwd_b(model.enc[layer], model.params.data(), lc, cache.dz);
        if (layer + 1 < model.enc.size()) {
            BatchLayerCache& up = cache.enc[layer + 1];
            up.x.resize(lc.h.size());
            for (std::size_t i = 0; i < lc.h.size(); ++i) up.x[i] = silu_(lc.h[i]);
        }
    }

    // decoder input: the encoder's top-layer state sequence, step-aligned
    {
        BatchLayerCache& lc = cache.dec[0];
        lc.L = L;
        lc.input = model.dec[0].input;
        lc.hidden = model.dec[0].hidden;
        lc.lanes = B;
        lc.x = cache.enc.back().h;
    }
    for (std::size_t layer = 0; layer < model.dec.size(); ++layer) {
        BatchLayerCache& lc = cache.dec[layer];
        lc.L = L;
        lc.input = model.dec[layer].input;
        lc.hidden = model.dec[layer].hidden;
        lc.lanes = B;
        layer_fwd_b(model.dec[layer], model.params.data(), lc, cache.dz);
        if (layer + 1 < model.dec.size()) {
            BatchLayerCache& up = cache.dec[layer + 1];
            up.x.resize(lc.h.size());
            for (std::size_t i = 0; i < lc.h.size(); ++i) up.x[i] = silu_(lc.h[i]);
        }
    }
    cache.pred = cache.dec.back().h;  // top decoder hidden width == C
    return cache.pred;
}

void denoise_bwd_batch(const DenoiserModel& model, BatchDenoiserCache& cache,
                       std::span<const double> dpred, double scale,
                       std::vector<double>& grad_out) {
    require(dpred.size() == cache.pred.size(), "denoise_bwd_batch: dpred size mismatch");
    require(grad_out.size() == model.params.size(),
            "denoise_bwd_batch: grad buffer size mismatch");

    std::vector<double>& dh = cache.dh;
    std::vector<double>& dx = cache.dx;
    std::vector<double>& dz = cache.dz;

    // decoder, top down
    dh.assign(dpred.begin(), dpred.end());
    for (std::size_t layer = model.dec.size(); layer-- > 0;) {
        layer_bwd_b(model.dec[layer], model.params.data(), cache.dec[layer], dh, dx, dz, scale,
                    grad_out);
        if (layer > 0) {
            const BatchLayerCache& below = cache.dec[layer - 1];
            dh.resize(below.h.size());
            for (std::size_t i = 0; i < below.h.size(); ++i) dh[i] = dx[i] * dsilu_(below.h[i]);
        }
    }
    // step-aligned hand-off into the encoder's top layer, as in denoise_bwd
    dh = dx;
    for (std::size_t layer = model.enc.size(); layer-- > 0;) {
        layer_bwd_b(model.enc[layer], model.params.data(), cache.enc[layer], dh, dx, dz, scale,
                    grad_out);
        if (layer > 0) {
            const BatchLayerCache& below = cache.enc[layer - 1];
            dh.resize(below.h.size());
            for (std::size_t i = 0; i < below.h.size(); ++i) dh[i] = dx[i] * dsilu_(below.h[i]);
        }
    }
}

}  // namespace tpidm
