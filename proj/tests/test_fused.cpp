#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tpidm/fused.hpp"
#include "tpidm/rng.hpp"
#include "tpidm/tape.hpp"

using namespace tpidm;

namespace {

DenoiserModel small_model(std::uint64_t seed) {
    DenoiserConfig cfg;
    cfg.window_len = 7;
    cfg.channels = 2;
    cfg.enc_hidden = {3, 4, 5};
    cfg.dec_hidden = {4, 3, 2};
    return init_denoiser(cfg, seed);
}

}  // namespace

TEST_CASE("fused forward matches the tape forward exactly") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DenoiserModel model = small_model(seed);
        Rng rng(seed * 31);
        const auto x_t = rng.normal_vec(14);
        const int t = 1 + static_cast<int>(seed * 17 % 100);

        DenoiserCache cache;
        const auto fused = denoise_fwd(model, x_t, t, 100, cache);

        Tape tape;
        DenoiserTape dp = bind_denoiser_params(tape, model);
        const NodeId pred = denoise_tape(tape, model, dp, x_t, t, 100);
        const auto& taped = tape.value(pred);

        REQUIRE(fused.size() == taped.size());
        for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused[i] == taped[i]);
    }
}

TEST_CASE("fused backward matches the tape gradients") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const DenoiserModel model = small_model(seed);
        Rng rng(seed * 101);
        const auto x_t = rng.normal_vec(14);
        const auto target = rng.normal_vec(14);
        const int t = 1 + static_cast<int>(seed * 13 % 100);
        const double scale = 0.5;

        // fused: squared-error loss, dpred = 2 (pred - target)
        DenoiserCache cache;
        const auto pred = denoise_fwd(model, x_t, t, 100, cache);
        std::vector<double> dpred(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) dpred[i] = 2.0 * (pred[i] - target[i]);
        std::vector<double> fused_grads(model.params.size(), 0.0);
        denoise_bwd(model, cache, dpred, scale, fused_grads);

        // tape reference on the identical loss
        Tape tape;
        DenoiserTape dp = bind_denoiser_params(tape, model);
        const NodeId out = denoise_tape(tape, model, dp, x_t, t, 100);
        std::vector<double> neg(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) neg[i] = -target[i];
        const NodeId loss = tape.sum_sq(tape.add(out, tape.leaf(neg)));
        tape.backward(loss);
        std::vector<double> tape_grads(model.params.size(), 0.0);
        accumulate_denoiser_grads(tape, model, dp, scale, tape_grads);

        double max_abs = 0.0, max_err = 0.0;
        for (std::size_t i = 0; i < tape_grads.size(); ++i) {
            max_abs = std::max(max_abs, std::abs(tape_grads[i]));
            max_err = std::max(max_err, std::abs(tape_grads[i] - fused_grads[i]));
        }
        CHECK(max_abs > 0.0);  // the loss actually reaches every layer
        CHECK(max_err <= 1e-12 * std::max(1.0, max_abs));
    }
}

TEST_CASE("fused backward accumulates across calls with the given scale") {
    const DenoiserModel model = small_model(3);
    Rng rng(7);
    const auto x_t = rng.normal_vec(14);
    DenoiserCache cache;
    const auto pred = denoise_fwd(model, x_t, 10, 100, cache);
    std::vector<double> dpred(pred.size(), 1.0);

    std::vector<double> once(model.params.size(), 0.0);
    denoise_bwd(model, cache, dpred, 1.0, once);

    std::vector<double> twice(model.params.size(), 0.0);
    denoise_fwd(model, x_t, 10, 100, cache);
    denoise_bwd(model, cache, dpred, 0.25, twice);
    denoise_fwd(model, x_t, 10, 100, cache);
    denoise_bwd(model, cache, dpred, 0.75, twice);

    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
}

TEST_CASE("fused forward validates its inputs") {
    const DenoiserModel model = small_model(1);
    DenoiserCache cache;
    Rng rng(1);
    const auto x_t = rng.normal_vec(14);
    CHECK_THROWS_AS(denoise_fwd(model, x_t, 0, 100, cache), contract_error);
    CHECK_THROWS_AS(denoise_fwd(model, x_t, 101, 100, cache), contract_error);
    const auto small = rng.normal_vec(6);
    CHECK_THROWS_AS(denoise_fwd(model, small, 1, 100, cache), contract_error);
}

TEST_CASE("batched forward matches the single-window forward exactly") {
    const DenoiserModel model = small_model(11);
    Rng rng(99);
    const int B = 5;
    std::vector<std::vector<double>> windows;
    std::vector<const double*> xs;
    std::vector<int> ts;
    for (int b = 0; b < B; ++b) {
        windows.push_back(rng.normal_vec(14));
        ts.push_back(1 + static_cast<int>(rng.uniform_int(0, 99)));
    }
    for (auto& w : windows) xs.push_back(w.data());

    BatchDenoiserCache bcache;
    const auto& bpred = denoise_fwd_batch(model, xs, ts, 100, bcache);

    DenoiserCache cache;
    for (int b = 0; b < B; ++b) {
        const auto pred = denoise_fwd(model, windows[b], ts[b], 100, cache);
        for (std::size_t j = 0; j < pred.size(); ++j)
            CHECK(bpred[j * B + b] == pred[j]);
    }
}

TEST_CASE("batched backward equals the sum of per-window gradients") {
    const DenoiserModel model = small_model(12);
    Rng rng(123);
    const int B = 4;
    std::vector<std::vector<double>> windows, targets;
    std::vector<const double*> xs;
    std::vector<int> ts;
    for (int b = 0; b < B; ++b) {
        windows.push_back(rng.normal_vec(14));
        targets.push_back(rng.normal_vec(14));
        ts.push_back(1 + static_cast<int>(rng.uniform_int(0, 99)));
    }
    for (auto& w : windows) xs.push_back(w.data());

    BatchDenoiserCache bcache;
    const auto& bpred = denoise_fwd_batch(model, xs, ts, 100, bcache);
    std::vector<double> bdpred(bpred.size());
    for (int b = 0; b < B; ++b)
        for (std::size_t j = 0; j < targets[b].size(); ++j)
            bdpred[j * B + b] = 2.0 * (bpred[j * B + b] - targets[b][j]);
    std::vector<double> bgrads(model.params.size(), 0.0);
    denoise_bwd_batch(model, bcache, bdpred, 0.5, bgrads);

    std::vector<double> sgrads(model.params.size(), 0.0);
    DenoiserCache cache;
    for (int b = 0; b < B; ++b) {
        const auto pred = denoise_fwd(model, windows[b], ts[b], 100, cache);
        std::vector<double> dpred(pred.size());
        for (std::size_t j = 0; j < pred.size(); ++j)
            dpred[j] = 2.0 * (pred[j] - targets[b][j]);
        denoise_bwd(model, cache, dpred, 0.5, sgrads);
    }

    double max_abs = 0.0;
    for (double g : sgrads) max_abs = std::max(max_abs, std::abs(g));
    CHECK(max_abs > 0.0);
    // lane reduction reassociates sums; allow tiny rounding differences
    for (std::size_t i = 0; i < sgrads.size(); ++i)
        CHECK(bgrads[i] == doctest::Approx(sgrads[i]).epsilon(1e-9));
}
