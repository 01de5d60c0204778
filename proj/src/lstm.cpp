#include "tpidm/lstm.hpp"

#include <cmath>

#include "tpidm/fused.hpp"
#include "tpidm/rng.hpp"

namespace tpidm {

std::vector<LstmSpec> layout_lstm_stack(const std::vector<int>& input_sizes,
                                        const std::vector<int>& hidden_sizes,
                                        std::size_t& offset) {
    require(input_sizes.size() == hidden_sizes.size(), "layout_lstm_stack: size mismatch");
    std::vector<LstmSpec> specs;
    specs.reserve(input_sizes.size());
    for (std::size_t i = 0; i < input_sizes.size(); ++i) {
        require(hidden_sizes[i] > 0, "layout_lstm_stack: zero hidden size");
        require(input_sizes[i] > 0, "layout_lstm_stack: zero input size");
        LstmSpec s;
        s.input = input_sizes[i];
        s.hidden = hidden_sizes[i];
        s.w_off = offset;
        offset += s.w_count();
        s.b_off = offset;
        offset += s.b_count();
        specs.push_back(s);
    }
    return specs;
}

static inline double sigmoid_(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void lstm_cell(std::span<const double> x, std::span<const double> h, std::span<const double> c,
               const double* w, const double* b, int input, int hidden,
               double* h_out, double* c_out) {
    require(static_cast<int>(x.size()) == input && static_cast<int>(h.size()) == hidden &&
                static_cast<int>(c.size()) == hidden,
            "lstm_cell: dimension mismatch");
    const int cols = input + hidden;
    // z = W [x;h] + b, four gate blocks of width `hidden`
    static thread_local std::vector<double> z;
    z.resize(static_cast<std::size_t>(4) * hidden);
    for (int r = 0; r < 4 * hidden; ++r) {
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        double acc = b[r];
        for (int j = 0; j < input; ++j) acc += wr[j] * x[j];
        for (int j = 0; j < hidden; ++j) acc += wr[input + j] * h[j];
        z[r] = acc;
    }
    for (int j = 0; j < hidden; ++j) {
        const double ig = sigmoid_(z[j]);
        const double fg = sigmoid_(z[hidden + j]);
        const double gg = std::tanh(z[2 * hidden + j]);
        const double og = sigmoid_(z[3 * hidden + j]);
        const double cj = fg * c[j] + ig * gg;
        c_out[j] = cj;
        h_out[j] = og * std::tanh(cj);
    }
}

TapeCellOut lstm_cell_tape(Tape& tape, NodeId x, NodeId h, NodeId c,
                           NodeId w, NodeId b, int input, int hidden) {
    const NodeId xh = tape.concat({x, h});
    const NodeId z = tape.linear(w, b, xh, 4 * hidden, input + hidden);
    const NodeId ig = tape.sigmoid(tape.slice(z, 0, hidden));
    const NodeId fg = tape.sigmoid(tape.slice(z, hidden, hidden));
    const NodeId gg = tape.tanh_op(tape.slice(z, 2 * hidden, hidden));
    const NodeId og = tape.sigmoid(tape.slice(z, 3 * hidden, hidden));
    const NodeId cn = tape.add(tape.mul(fg, c), tape.mul(ig, gg));
    const NodeId hn = tape.mul(og, tape.tanh_op(cn));
    return {hn, cn};
}

std::vector<std::vector<double>> run_stack(const std::vector<LstmSpec>& specs,
                                           const std::vector<double>& params,
                                           const std::vector<std::vector<double>>& inputs,
                                           std::vector<double>* final_hidden) {
    const std::size_t L = inputs.size();
    std::vector<std::vector<double>> seq(L);
    std::vector<std::vector<double>> cur;
    for (std::size_t layer = 0; layer < specs.size(); ++layer) {
        const LstmSpec& s = specs[layer];
        const double* w = params.data() + s.w_off;
        const double* b = params.data() + s.b_off;
        std::vector<double> h(s.hidden, 0.0), c(s.hidden, 0.0);
        std::vector<double> hn(s.hidden), cn(s.hidden);
        std::vector<std::vector<double>> out(L);
        for (std::size_t i = 0; i < L; ++i) {
            const std::vector<double>& x = (layer == 0) ? inputs[i] : cur[i];
            lstm_cell(x, h, c, w, b, s.input, s.hidden, hn.data(), cn.data());
            h.swap(hn);
            c.swap(cn);
            out[i] = h;
        }
        if (final_hidden && layer + 1 == specs.size()) *final_hidden = h;
        if (layer + 1 < specs.size()) {
            // SiLU between stacked layers
            for (auto& v : out)
                for (auto& e : v) e = e / (1.0 + std::exp(-e));
        }
        cur = std::move(out);
    }
    return cur;
}

StackTapeParams bind_stack_params(Tape& tape, const std::vector<LstmSpec>& specs,
                                  const std::vector<double>& params) {
    StackTapeParams tp;
    for (const LstmSpec& s : specs) {
        tp.w.push_back(tape.param_leaf({params.data() + s.w_off, s.w_count()}));
        tp.b.push_back(tape.param_leaf({params.data() + s.b_off, s.b_count()}));
    }
    return tp;
}

std::vector<NodeId> run_stack_tape(Tape& tape, const std::vector<LstmSpec>& specs,
                                   const StackTapeParams& tp,
                                   const std::vector<NodeId>& inputs,
                                   NodeId* final_hidden) {
    const std::size_t L = inputs.size();
    std::vector<NodeId> cur;
    for (std::size_t layer = 0; layer < specs.size(); ++layer) {
        const LstmSpec& s = specs[layer];
        std::vector<double> zeros(s.hidden, 0.0);
        NodeId h = tape.leaf(zeros);
        NodeId c = tape.leaf(zeros);
        std::vector<NodeId> out(L);
        for (std::size_t i = 0; i < L; ++i) {
            const NodeId x = (layer == 0) ? inputs[i] : cur[i];
            TapeCellOut o = lstm_cell_tape(tape, x, h, c, tp.w[layer], tp.b[layer],
                                           s.input, s.hidden);
            h = o.h;
            c = o.c;
            out[i] = h;
        }
        if (final_hidden && layer + 1 == specs.size()) *final_hidden = h;
        if (layer + 1 < specs.size())
            for (auto& id : out) id = tape.silu(id);
        cur = std::move(out);
    }
    return cur;
}

void accumulate_stack_grads(const Tape& tape, const std::vector<LstmSpec>& specs,
                            const StackTapeParams& tp, double scale, std::vector<double>& out) {
    for (std::size_t layer = 0; layer < specs.size(); ++layer) {
        const LstmSpec& s = specs[layer];
        const auto& gw = tape.grad(tp.w[layer]);
        if (!gw.empty())
            for (std::size_t i = 0; i < s.w_count(); ++i) out[s.w_off + i] += scale * gw[i];
        const auto& gb = tape.grad(tp.b[layer]);
        if (!gb.empty())
            for (std::size_t i = 0; i < s.b_count(); ++i) out[s.b_off + i] += scale * gb[i];
    }
}

void init_lstm_stack(const std::vector<LstmSpec>& specs, std::uint64_t seed,
                     std::vector<double>& params) {
    Rng rng(seed);
    for (const LstmSpec& s : specs) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.hidden));
        for (std::size_t i = 0; i < s.w_count(); ++i)
            params[s.w_off + i] = rng.uniform(-bound, bound);
        for (std::size_t i = 0; i < s.b_count(); ++i)
            params[s.b_off + i] = rng.uniform(-bound, bound);
    }
}

DenoiserModel init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
    require(!cfg.enc_hidden.empty() && !cfg.dec_hidden.empty(), "init_denoiser: empty stack");
    require(cfg.dec_hidden.back() == cfg.channels,
            "init_denoiser: decoder output width must equal channel count");
    for (int h : cfg.enc_hidden) require(h > 0, "init_denoiser: zero hidden size");
    for (int h : cfg.dec_hidden) require(h > 0, "init_denoiser: zero hidden size");

    DenoiserModel m;
    m.cfg = cfg;
    std::size_t offset = 0;
    std::vector<int> enc_in;
    enc_in.push_back(cfg.channels + 1);  // extra channel carries t/T
    for (std::size_t i = 1; i < cfg.enc_hidden.size(); ++i)
        enc_in.push_back(cfg.enc_hidden[i - 1]);
    m.enc = layout_lstm_stack(enc_in, cfg.enc_hidden, offset);

    std::vector<int> dec_in;
    dec_in.push_back(cfg.enc_hidden.back());  // encoder top-layer states, step-aligned
    for (std::size_t i = 1; i < cfg.dec_hidden.size(); ++i)
        dec_in.push_back(cfg.dec_hidden[i - 1]);
    m.dec = layout_lstm_stack(dec_in, cfg.dec_hidden, offset);

    m.params.assign(offset, 0.0);
    init_lstm_stack(m.enc, seed, m.params);
    init_lstm_stack(m.dec, splitmix64(seed), m.params);
    return m;
}

std::vector<double> denoise(const DenoiserModel& model, std::span<const double> x_t, int t, int T) {
    // Cached-forward fast path; reuses buffers across the many calls scoring
    // makes. Produces the same values as run_stack over the same layout.
    static thread_local DenoiserCache cache;
    return denoise_fwd(model, x_t, t, T, cache);
}

DenoiserTape bind_denoiser_params(Tape& tape, const DenoiserModel& model) {
    DenoiserTape dp;
    dp.enc = bind_stack_params(tape, model.enc, model.params);
    dp.dec = bind_stack_params(tape, model.dec, model.params);
    return dp;
}

NodeId denoise_tape(Tape& tape, const DenoiserModel& model, const DenoiserTape& dp,
                    std::span<const double> x_t, int t, int T) {
    const int L = model.cfg.window_len;
    const int C = model.cfg.channels;
    require(t >= 1 && t <= T, "denoise_tape: diffusion step out of range");
    require(static_cast<int>(x_t.size()) == L * C, "denoise_tape: window size mismatch");

    const double tcond = static_cast<double>(t) / static_cast<double>(T);
    std::vector<NodeId> enc_in(L);
    std::vector<double> step(C + 1);
    for (int i = 0; i < L; ++i) {
        for (int ch = 0; ch < C; ++ch) step[ch] = x_t[static_cast<std::size_t>(i) * C + ch];
        step[C] = tcond;
        enc_in[i] = tape.leaf(step);
    }
    // decoder consumes the encoder's top-layer state sequence, step-aligned
    auto dec_in = run_stack_tape(tape, model.enc, dp.enc, enc_in);
    auto out_seq = run_stack_tape(tape, model.dec, dp.dec, dec_in);
    return tape.concat(out_seq);
}

void accumulate_denoiser_grads(const Tape& tape, const DenoiserModel& model,
                               const DenoiserTape& dp, double scale, std::vector<double>& out) {
    accumulate_stack_grads(tape, model.enc, dp.enc, scale, out);
    accumulate_stack_grads(tape, model.dec, dp.dec, scale, out);
}

}  // namespace tpidm
