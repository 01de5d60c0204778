#ifndef TPIDM_LSTM_HPP
#define TPIDM_LSTM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tpidm/tape.hpp"

namespace tpidm {

// One LSTM layer: W maps [x ; h] (input+hidden) to the four gates in order
// (input, forget, cell, output), each of width `hidden`. Parameters live in a
// flat model vector at [w_off, w_off + 4*hidden*(input+hidden)) followed by
// the bias at [b_off, b_off + 4*hidden).
struct LstmSpec {
    int input = 0;
    int hidden = 0;
    std::size_t w_off = 0;
    std::size_t b_off = 0;

    std::size_t w_count() const { return static_cast<std::size_t>(4 * hidden) * (input + hidden); }
    std::size_t b_count() const { return static_cast<std::size_t>(4 * hidden); }
};

// Lays out a stack of LSTM layers in a flat parameter vector.
// input_sizes[i] / hidden_sizes[i] give layer i's dimensions.
std::vector<LstmSpec> layout_lstm_stack(const std::vector<int>& input_sizes,
                                        const std::vector<int>& hidden_sizes,
                                        std::size_t& offset);

// Canonical cell equations: gates by sigmoid, candidate by tanh,
// c' = f.c + i.g, h' = o.tanh(c').
void lstm_cell(std::span<const double> x, std::span<const double> h, std::span<const double> c,
               const double* w, const double* b, int input, int hidden,
               double* h_out, double* c_out);

// Same cell on the tape; returns (h', c').
struct TapeCellOut {
    NodeId h;
    NodeId c;
};
TapeCellOut lstm_cell_tape(Tape& tape, NodeId x, NodeId h, NodeId c,
                           NodeId w, NodeId b, int input, int hidden);

// Runs a stack over a sequence with SiLU applied to hidden sequences between
// stacked layers (not inside gates). Returns the top layer's hidden sequence;
// optionally the final hidden state of the last layer (the latent).
std::vector<std::vector<double>> run_stack(const std::vector<LstmSpec>& specs,
                                           const std::vector<double>& params,
                                           const std::vector<std::vector<double>>& inputs,
                                           std::vector<double>* final_hidden = nullptr);

struct StackTapeParams {
    std::vector<NodeId> w, b;
};
StackTapeParams bind_stack_params(Tape& tape, const std::vector<LstmSpec>& specs,
                                  const std::vector<double>& params);
std::vector<NodeId> run_stack_tape(Tape& tape, const std::vector<LstmSpec>& specs,
                                   const StackTapeParams& tp,
                                   const std::vector<NodeId>& inputs,
                                   NodeId* final_hidden = nullptr);

// Accumulates tape gradients of a stack's parameters into `out` (flat model
// layout) scaled by `scale`.
void accumulate_stack_grads(const Tape& tape, const std::vector<LstmSpec>& specs,
                            const StackTapeParams& tp, double scale, std::vector<double>& out);

// Seeded uniform init in [-1/sqrt(hidden), +1/sqrt(hidden)] per layer.
void init_lstm_stack(const std::vector<LstmSpec>& specs, std::uint64_t seed,
                     std::vector<double>& params);

enum class Parameterization { Epsilon, X0 };

struct DenoiserConfig {
    int channels = 2;
    int window_len = 100;
    std::vector<int> enc_hidden = {8, 16, 32};
    std::vector<int> dec_hidden = {16, 8, 2};  // last entry must equal channels
    Parameterization mode = Parameterization::Epsilon;
};

// LSTM encoder-decoder denoiser. The encoder consumes [x_t ; t/T] per
// timestep; the decoder consumes the encoder's top-layer state sequence,
// step-aligned, so per-step detail survives the pass through the latent
// width. The decoder's top hidden sequence is the prediction (noise or clean
// window, per parameterization mode).
struct DenoiserModel {
    DenoiserConfig cfg;
    std::vector<LstmSpec> enc, dec;
    std::vector<double> params;

    int latent_size() const { return cfg.enc_hidden.back(); }
};

DenoiserModel init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

// Forward pass without a tape; x_t is [L x C] time-major, 1 <= t <= T.
std::vector<double> denoise(const DenoiserModel& model, std::span<const double> x_t, int t, int T);

struct DenoiserTape {
    StackTapeParams enc, dec;
};
DenoiserTape bind_denoiser_params(Tape& tape, const DenoiserModel& model);
// Returns the [L*C] time-major prediction node.
NodeId denoise_tape(Tape& tape, const DenoiserModel& model, const DenoiserTape& dp,
                    std::span<const double> x_t, int t, int T);
void accumulate_denoiser_grads(const Tape& tape, const DenoiserModel& model,
                               const DenoiserTape& dp, double scale, std::vector<double>& out);

}  // namespace tpidm

#endif
