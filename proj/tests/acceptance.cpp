// Acceptance gate: runs every acceptance criterion and prints one PASS/FAIL
// line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "tpidm/autoencoder.hpp"
#include "tpidm/detect.hpp"
#include "tpidm/diffusion.hpp"
#include "tpidm/gradcheck.hpp"
#include "tpidm/kmeans.hpp"
#include "tpidm/pipeline.hpp"
#include "tpidm/rng.hpp"
#include "tpidm/simulate.hpp"
#include "tpidm/tape.hpp"
#include "tpidm/train.hpp"

using namespace tpidm;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 1 -----------------------------------------------------------

// One finite-difference check of a primitive composition; returns the worst
// relative error.
double primitive_fd(int which, Rng& rng) {
    const int n = 4 + static_cast<int>(rng.uniform_int(0, 3));
    std::vector<double> params(n);
    for (auto& p : params) p = rng.uniform(-1.5, 1.5);
    if (which == 11)  // keep reciprocal away from zero
        for (auto& p : params) p += (p >= 0.0 ? 1.0 : -1.0);

    auto loss = [&](const std::vector<double>& v) {
        Tape t;
        const NodeId x = t.param_leaf(v);
        NodeId y = x;
        switch (which) {
            case 0: y = t.sigmoid(x); break;
            case 1: y = t.tanh_op(x); break;
            case 2: y = t.silu(x); break;
            case 3: y = t.add(x, t.sigmoid(x)); break;
            case 4: y = t.mul(x, t.tanh_op(x)); break;
            case 5: y = t.concat({x, t.silu(x)}); break;
            case 6: y = t.slice(t.concat({x, x}), 1, static_cast<int>(v.size())); break;
            case 7: return t.value(t.mean(x))[0];
            case 8: return t.value(t.sum_sq(x))[0];
            case 9: y = t.affine(x, 1.7, -0.3); break;
            case 10: y = t.central_diff(x, 0.05); break;
            case 11: y = t.reciprocal(x); break;
            case 12: {
                // dense linear layer: params act as W; fixed x and b
                const int cols = static_cast<int>(v.size()) / 2;
                const int rows = 2;
                std::vector<double> w(v.begin(), v.begin() + 2 * cols);
                std::vector<double> xin(cols, 0.7), b(rows, 0.1);
                Tape t2;
                const NodeId wn = t2.param_leaf(w);
                y = t2.linear(wn, t2.leaf(b), t2.leaf(xin), rows, cols);
                return t2.value(t2.sum_sq(y))[0];
            }
        }
        return t.value(t.sum_sq(y))[0];
    };

    // analytic gradient via the same graph
    Tape t;
    const NodeId x = t.param_leaf(params);
    NodeId y = x;
    NodeId scalar = -1;
    switch (which) {
        case 0: y = t.sigmoid(x); break;
        case 1: y = t.tanh_op(x); break;
        case 2: y = t.silu(x); break;
        case 3: y = t.add(x, t.sigmoid(x)); break;
        case 4: y = t.mul(x, t.tanh_op(x)); break;
        case 5: y = t.concat({x, t.silu(x)}); break;
        case 6: y = t.slice(t.concat({x, x}), 1, n); break;
        case 7: scalar = t.mean(x); break;
        case 8: scalar = t.sum_sq(x); break;
        case 9: y = t.affine(x, 1.7, -0.3); break;
        case 10: y = t.central_diff(x, 0.05); break;
        case 11: y = t.reciprocal(x); break;
        case 12: {
            const int cols = n / 2;
            std::vector<double> w(params.begin(), params.begin() + 2 * cols);
            std::vector<double> xin(cols, 0.7), b(2, 0.1);
            Tape t2;
            const NodeId wn = t2.param_leaf(w);
            const NodeId out = t2.linear(wn, t2.leaf(b), t2.leaf(xin), 2, cols);
            const NodeId l = t2.sum_sq(out);
            t2.backward(l);
            std::vector<double> analytic = t2.grad(wn);
            analytic.resize(params.size(), 0.0);  // unused tail of params
            return grad_check(loss, params, analytic);
        }
    }
    if (scalar < 0) scalar = t.sum_sq(y);
    t.backward(scalar);
    return grad_check(loss, params, t.grad(x));
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_prim = 0.0;
    Rng rng(1001);
    for (int inst = 0; inst < 100; ++inst)
        for (int which = 0; which < 13; ++which)
            worst_prim = std::max(worst_prim, primitive_fd(which, rng));

    // full denoiser, tiny widths, 100 random instances
    double worst_e2e = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        DenoiserConfig dc;
        dc.window_len = 5;
        dc.channels = 2;
        dc.enc_hidden = {2, 3};
        dc.dec_hidden = {3, 2};
        DenoiserModel model = init_denoiser(dc, 2000 + inst);
        Rng r2(3000 + inst);
        const auto x_t = r2.normal_vec(10);
        const auto tgt = r2.normal_vec(10);
        const int t = 1 + static_cast<int>(r2.uniform_int(0, 99));

        auto loss = [&](const std::vector<double>& p) {
            DenoiserModel m = model;
            m.params = p;
            const auto pred = denoise(m, x_t, t, 100);
            double s = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double d = pred[i] - tgt[i];
                s += d * d;
            }
            return s;
        };
        Tape tape;
        DenoiserTape dp = bind_denoiser_params(tape, model);
        const NodeId out = denoise_tape(tape, model, dp, x_t, t, 100);
        std::vector<double> neg(tgt.size());
        for (std::size_t i = 0; i < tgt.size(); ++i) neg[i] = -tgt[i];
        tape.backward(tape.sum_sq(tape.add(out, tape.leaf(neg))));
        std::vector<double> analytic(model.params.size(), 0.0);
        accumulate_denoiser_grads(tape, model, dp, 1.0, analytic);
        worst_e2e = std::max(worst_e2e, grad_check(loss, model.params, analytic));
    }
    const double secs = seconds_since(t0);
    const bool pass = worst_prim < 1e-5 && worst_e2e < 1e-4 && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "gradients: primitives max rel err %.2e (<1e-5), end-to-end %.2e (<1e-4), %.0fs",
                  worst_prim, worst_e2e, secs);
    report(1, pass, buf);
}

// ---- criterion 2 -----------------------------------------------------------

void criterion2() {
    const NoiseSchedule sched = make_linear_schedule(100, 1e-4, 0.05);
    const std::vector<double> x0{0.6, -0.4, 0.9, -0.8};
    const int N = 10000;
    bool pass = true;
    std::string detail = "forward stats within 3 SE at t=1,50,100";
    for (int t : {1, 50, 100}) {
        const double ab = sched.abar(t);
        Rng rng(500 + t);
        std::vector<double> mean(x0.size(), 0.0), m2(x0.size(), 0.0);
        for (int i = 0; i < N; ++i) {
            const auto eps = rng.normal_vec(x0.size());
            const auto xt = forward_sample(x0, t, eps, sched);
            for (std::size_t j = 0; j < x0.size(); ++j) {
                mean[j] += xt[j];
                m2[j] += xt[j] * xt[j];
            }
        }
        const double var_true = 1.0 - ab;
        const double se_mean = std::sqrt(var_true / N);
        const double se_var = var_true * std::sqrt(2.0 / (N - 1));
        for (std::size_t j = 0; j < x0.size(); ++j) {
            const double mu = mean[j] / N;
            const double var = m2[j] / N - mu * mu;
            if (std::abs(mu - std::sqrt(ab) * x0[j]) > 3.0 * se_mean) pass = false;
            if (std::abs(var - var_true) > 3.0 * se_var) pass = false;
        }
    }
    report(2, pass, detail);
}

// ---- criterion 3 -----------------------------------------------------------

void criterion3() {
    bool pass = true;
    for (WeightKind kind : {WeightKind::LogSigmoid, WeightKind::HardSigmoid,
                            WeightKind::Sigmoid, WeightKind::Relu}) {
        double m, n, l;
        default_weight_params(kind, m, n, l);
        const WeightSchedule ws = make_weight_schedule(kind, m, n, l, 100);
        if (cumulative_weight(0, ws) != 1.0) pass = false;
        for (int s = 1; s <= ws.T; ++s) {
            const double lam = pinn_weight(s, ws);
            if (lam < 0.0 || lam > 1.0) pass = false;
            if (cumulative_weight(s, ws) > cumulative_weight(s - 1, ws) + 1e-15) pass = false;
        }
        if (kind != WeightKind::Relu && cumulative_weight(ws.T, ws) > 1e-3) pass = false;
    }
    report(3, pass, "all four schedules: lambda in [0,1], lambda_bar monotone, saturation");
}

// ---- criterion 4 -----------------------------------------------------------

double residual_mse(const PhysicsModel& m, const TimeSeries& s, std::size_t start, int L,
                    double dt) {
    const int C = static_cast<int>(s.channel_count());
    std::vector<double> w(static_cast<std::size_t>(L) * C);
    for (int i = 0; i < L; ++i)
        for (int c = 0; c < C; ++c)
            w[static_cast<std::size_t>(i) * C + c] = s.channels[c][start + i];
    const auto r = residual(m, w, L, C, dt);
    double acc = 0.0;
    for (double v : r) acc += v * v;
    return acc / static_cast<double>(r.size());
}

// Mean residual MSE over `nwin` consecutive length-100 windows. Window-edge
// one-sided differences dominate the error; averaging many windows samples
// those edges across signal phases so halving dt cleanly quarters the MSE.
double residual_mse_span(const PhysicsModel& m, const TimeSeries& s, std::size_t start,
                         int nwin, double dt) {
    const int L = 100;
    double acc = 0.0;
    std::size_t cnt = 0;
    const int C = static_cast<int>(s.channel_count());
    for (int k = 0; k < nwin; ++k) {
        std::vector<double> w(static_cast<std::size_t>(L) * C);
        for (int i = 0; i < L; ++i)
            for (int c = 0; c < C; ++c)
                w[static_cast<std::size_t>(i) * C + c] =
                    s.channels[c][start + static_cast<std::size_t>(k) * L + i];
        const auto r = residual(m, w, L, C, dt);
        for (double v : r) acc += v * v;
        cnt += r.size();
    }
    return acc / static_cast<double>(cnt);
}

void criterion4() {
    bool pass = true;
    std::string detail;

    const LotkaVolterra lv;
    // fixed point (gamma/delta, alpha/beta): residual vanishes identically
    {
        const int L = 50;
        std::vector<double> w(static_cast<std::size_t>(L) * 2);
        for (int i = 0; i < L; ++i) {
            w[static_cast<std::size_t>(i) * 2] = lv.gamma / lv.delta;
            w[static_cast<std::size_t>(i) * 2 + 1] = lv.alpha / lv.beta;
        }
        for (double v : residual(lv, w, L, 2, 0.01))
            if (v != 0.0) pass = false;
    }

    // RK4 trajectory residuals and the dt-halving prediction
    const LvParams lp;
    const TimeSeries coarse = simulate_lv(lp, 10.0, 2.0, 2000, 0.01);
    const TimeSeries fine = simulate_lv(lp, 10.0, 2.0, 4000, 0.005);
    const double mse_c = residual_mse_span(lv, coarse, 500, 10, 0.01);
    const double mse_f = residual_mse_span(lv, fine, 1000, 20, 0.005);
    const double ratio = mse_c / mse_f;
    if (!(mse_c < 1e-4)) pass = false;
    if (ratio < 3.2 || ratio > 4.8) pass = false;  // within 20% of 4x

    // analogues on the synthetic EMPS / ideal-gas generators
    const TimeSeries emps_c = simulate_emps(95.0, 200.0, 20.0, 0.0, EmpsProfile{}, 2000, 0.01);
    const TimeSeries emps_f = simulate_emps(95.0, 200.0, 20.0, 0.0, EmpsProfile{}, 4000, 0.005);
    const EmpsIdm emps;
    const double emps_mc = residual_mse(emps, emps_c, 500, 100, 0.01);
    const double emps_mf = residual_mse(emps, emps_f, 1000, 100, 0.005);
    double tau_power = 0.0;
    for (int i = 0; i < 100; ++i) tau_power += emps_c.channels[0][500 + i] *
                                               emps_c.channels[0][500 + i];
    tau_power /= 100.0;
    if (!(emps_mc < 0.05 * tau_power)) pass = false;
    if (!(emps_mf < emps_mc)) pass = false;  // refinement must improve the fit

    const TimeSeries gas_c = simulate_gas(287.0, 1.2, GasProfile{}, 2000, 0.01);
    const TimeSeries gas_f = simulate_gas(287.0, 1.2, GasProfile{}, 4000, 0.005);
    const IdealGas gas;
    const double gas_mc = residual_mse_span(gas, gas_c, 500, 10, 0.01);
    const double gas_mf = residual_mse_span(gas, gas_f, 1000, 20, 0.005);
    const double gas_ratio = gas_mc / gas_mf;
    if (gas_ratio < 3.2 || gas_ratio > 4.8) pass = false;

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "LV mse %.2e ratio %.2f; emps rel %.3f; gas ratio %.2f",
                  mse_c, ratio, emps_mc / tau_power, gas_ratio);
    report(4, pass, buf);
}

// ---- criteria 5 and 8: desk-scale experiment -------------------------------

struct DeskArtifacts {
    ExperimentConfig cfg;
    Dataset ds;
    WindowSet normal_pool, anom_pool;
    NoiseSchedule sched;
};

WindowSet filter_pool(const WindowSet& all, std::uint64_t eval_start, bool anomalous) {
    WindowSet out;
    out.window_len = all.window_len;
    out.channels = all.channels;
    for (std::size_t i = 0; i < all.windows.size(); ++i) {
        if (all.source_index[i] < eval_start) continue;
        if ((all.labels[i] != 0) != anomalous) continue;
        out.windows.push_back(all.windows[i]);
        out.labels.push_back(all.labels[i]);
        out.source_index.push_back(all.source_index[i]);
    }
    return out;
}

DeskArtifacts desk_setup(const std::string& config_path) {
    DeskArtifacts a;
    a.cfg = load_config(config_path);
    a.cfg.validate();
    a.ds = build_dataset(a.cfg);
    const TimeSeries scaled = scale_to_unit(a.ds.raw, a.ds.scale);
    const WindowSet all = make_windows(scaled, a.cfg.window);
    a.normal_pool = filter_pool(all, a.cfg.eval_start, false);
    a.anom_pool = filter_pool(all, a.cfg.eval_start, true);
    a.sched = make_linear_schedule(a.cfg.T, a.cfg.sigma1, a.cfg.sigmaT);
    return a;
}

double f1_on_eval(const WindowSet& eval, const DenoiserModel& model, const DeskArtifacts& a,
                  double threshold, std::uint64_t score_seed) {
    const auto scores = score_windows(eval, model, a.sched, score_seed, a.cfg.elbo_stride);
    return classify_and_f1(scores, threshold, eval.labels).f1;
}

void criteria5_and_8(const std::string& config_path) {
    const auto t0 = std::chrono::steady_clock::now();
    DeskArtifacts a = desk_setup(config_path);

    TrainOptions topt;
    topt.epochs = a.cfg.epochs;
    topt.batch = a.cfg.batch;
    topt.lr = a.cfg.lr;
    topt.l2 = a.cfg.l2;
    topt.seed = a.cfg.train_seed;
    topt.windows_per_epoch = a.cfg.windows_per_epoch;

    const PhysicsModel physics = physics_from_config(a.cfg);
    const WeightSchedule weights = schedule_from_config(a.cfg);

    DenoiserModel tpidm = model_from_config(a.cfg, a.ds.train.channels);
    train_denoiser(tpidm, a.ds.train, a.sched, &physics, &weights, a.ds.scale, a.cfg.dt, topt,
                   nullptr);
    DenoiserModel dm = model_from_config(a.cfg, a.ds.train.channels);
    train_denoiser(dm, a.ds.train, a.sched, nullptr, nullptr, a.ds.scale, a.cfg.dt, topt,
                   nullptr);

    const ThresholdConfig tc{a.cfg.trim, a.cfg.detect_k};
    const std::uint64_t val_seed = derive_seed(a.cfg.detect_seed, 1);
    const double thr_tpidm = calibrate_threshold(
        score_windows(a.ds.val, tpidm, a.sched, val_seed, a.cfg.elbo_stride), tc);
    const double thr_dm = calibrate_threshold(
        score_windows(a.ds.val, dm, a.sched, val_seed, a.cfg.elbo_stride), tc);

    // Ten seeded eval-set repetitions; repetition 0 carries the F1 gate.
    // Scoring reuses the calibration noise stream (common random numbers), so
    // repetitions differ through the eval-set draw alone.
    int wins = 0;
    double f1_tpidm0 = 0.0, f1_dm0 = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const WindowSet eval = build_eval_set(a.normal_pool, a.anom_pool, a.cfg.eval_normal,
                                              a.cfg.eval_anomaly,
                                              derive_seed(a.cfg.data_seed, 100 + rep));
        const double f_t = f1_on_eval(eval, tpidm, a, thr_tpidm, val_seed);
        const double f_d = f1_on_eval(eval, dm, a, thr_dm, val_seed);
        if (f_t >= f_d) ++wins;
        if (rep == 0) {
            f1_tpidm0 = f_t;
            f1_dm0 = f_d;
        }
    }
    const double secs = seconds_since(t0);
    const bool pass5 = f1_tpidm0 >= 0.90 && f1_dm0 >= 0.90 && wins >= 7 && secs <= 3600.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "desk LV: TPIDM f1 %.4f, DM f1 %.4f (>=0.90), TPIDM>=DM in %d/10, %.0fs",
                  f1_tpidm0, f1_dm0, wins, secs);
    report(5, pass5, buf);

    // ---- criterion 8: baselines on the same desk-scale setup ---------------
    const WindowSet eval0 = build_eval_set(a.normal_pool, a.anom_pool, a.cfg.eval_normal,
                                           a.cfg.eval_anomaly,
                                           derive_seed(a.cfg.data_seed, 100));

    const KMeansModel km = kmeans_fit(a.ds.train.windows, 4, a.cfg.train_seed);
    std::vector<double> km_val, km_eval;
    for (const auto& w : a.ds.val.windows) km_val.push_back(kmeans_score(w, km));
    for (const auto& w : eval0.windows) km_eval.push_back(kmeans_score(w, km));
    const double km_f1 =
        classify_and_f1(km_eval, calibrate_threshold(km_val, tc), eval0.labels).f1;

    BaselineTrainConfig bc;
    bc.epochs = 30;
    bc.batch = a.cfg.batch;
    bc.lr = 1e-3;
    bc.seed = a.cfg.train_seed;
    bc.windows_per_epoch = a.cfg.windows_per_epoch;

    AutoencoderModel ae = init_autoencoder(a.ds.train.channels, a.cfg.window,
                                           a.cfg.enc_hidden_sizes(),
                                           a.cfg.dec_hidden_sizes(), a.cfg.train_seed);
    train_autoencoder(ae, a.ds.train, bc);
    std::vector<double> ae_val, ae_eval;
    for (const auto& w : a.ds.val.windows) ae_val.push_back(ae_score(w, ae));
    for (const auto& w : eval0.windows) ae_eval.push_back(ae_score(w, ae));
    const double ae_f1 =
        classify_and_f1(ae_eval, calibrate_threshold(ae_val, tc), eval0.labels).f1;

    VaeModel vae = init_vae(a.ds.train.channels, a.cfg.window, a.cfg.enc_hidden_sizes(),
                            a.cfg.dec_hidden_sizes(), a.cfg.train_seed);
    train_vae(vae, a.ds.train, bc);
    std::vector<double> vae_val, vae_eval;
    // Same common-random-numbers treatment as the diffusion scorer.
    const std::uint64_t vseed = derive_seed(a.cfg.detect_seed, 300);
    for (std::size_t i = 0; i < a.ds.val.windows.size(); ++i)
        vae_val.push_back(vae_score(a.ds.val.windows[i], vae, vseed));
    for (std::size_t i = 0; i < eval0.windows.size(); ++i)
        vae_eval.push_back(vae_score(eval0.windows[i], vae, vseed));
    const double vae_f1 =
        classify_and_f1(vae_eval, calibrate_threshold(vae_val, tc), eval0.labels).f1;

    const bool pass8 = km_f1 >= 0.70 && ae_f1 >= 0.80 && vae_f1 >= 0.80;
    std::snprintf(buf, sizeof buf,
                  "baselines: kmeans f1 %.4f (>=0.70), AE f1 %.4f, VAE f1 %.4f (>=0.80)",
                  km_f1, ae_f1, vae_f1);
    report(8, pass8, buf);
}

// ---- criterion 6 -----------------------------------------------------------

void criterion6() {
    std::vector<double> scores(10);
    std::iota(scores.begin(), scores.end(), 1.0);
    const double thr = calibrate_threshold(scores, {0.1, 1.5});
    report(6, thr == 12.25, "calibrate_threshold({1..10}, 0.1, 1.5) = " + std::to_string(thr));
}

// ---- criterion 7 -----------------------------------------------------------

void wilcoxon_pair(int n, const std::vector<int>& negatives, std::vector<double>& a,
                   std::vector<double>& b) {
    a.assign(n, 0.0);
    b.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const bool neg =
            std::find(negatives.begin(), negatives.end(), i + 1) != negatives.end();
        a[i] = (neg ? -1.0 : 1.0) * static_cast<double>(i + 1);
    }
}

void criterion7() {
    bool pass = true;
    for (int n : {6, 8, 10}) {
        std::vector<double> a, b;
        wilcoxon_pair(n, {}, a, b);
        const WilcoxonResult r = wilcoxon_signed_rank(a, b);
        if (std::abs(r.p_value - 2.0 / std::pow(2.0, n)) > 1e-12) pass = false;
    }
    // published two-sided critical values at alpha = 0.05: W(6)=0, W(8)=3, W(10)=8
    const struct { int n, crit; std::vector<int> at, above; } cases[] = {
        {6, 0, {}, {1}}, {8, 3, {1, 2}, {4}}, {10, 8, {3, 5}, {4, 5}}};
    for (const auto& c : cases) {
        std::vector<double> a, b;
        wilcoxon_pair(c.n, c.at, a, b);
        if (wilcoxon_signed_rank(a, b).p_value > 0.05) pass = false;
        wilcoxon_pair(c.n, c.above, a, b);
        if (wilcoxon_signed_rank(a, b).p_value <= 0.05) pass = false;
    }
    report(7, pass, "exact p = 2/2^n and critical values W(6)=0, W(8)=3, W(10)=8");
}

// ---- criterion 9 -----------------------------------------------------------

std::vector<char> file_bytes(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion9() {
    ExperimentConfig cfg;
    cfg.n_points = 3000;
    cfg.window = 20;
    cfg.eval_start = 2000;
    cfg.eval_normal = 40;
    cfg.eval_anomaly = 20;
    cfg.anomaly_segments = 2;
    cfg.anomaly_length = 300;
    cfg.enc_hidden = "3,4";
    cfg.dec_hidden = "3,2";
    cfg.epochs = 2;
    cfg.batch = 32;
    cfg.windows_per_epoch = 64;
    cfg.elbo_stride = 25;

    const fs::path root = fs::path("/tmp") / "tpidm_acceptance_det";
    fs::remove_all(root);
    bool pass = true;
    pass = pass && cmd_train(cfg, "", (root / "t1").string()) == 0;
    pass = pass && cmd_train(cfg, "", (root / "t2").string()) == 0;
    pass = pass && file_bytes((root / "t1/checkpoint.bin").string()) ==
                       file_bytes((root / "t2/checkpoint.bin").string());
    const std::string ckpt = (root / "t1/checkpoint.bin").string();
    pass = pass && cmd_detect(ckpt, "", nullptr, (root / "d1").string()) == 0;
    pass = pass && cmd_detect(ckpt, "", nullptr, (root / "d2").string()) == 0;
    pass = pass && file_bytes((root / "d1/scores.csv").string()) ==
                       file_bytes((root / "d2/scores.csv").string());
    fs::remove_all(root);
    report(9, pass, "cmd_train and cmd_detect reruns are bit-identical");
}

// ---- criterion 10 ----------------------------------------------------------

void criterion10() {
    Rng rng(77);
    const int d = 30;
    std::vector<double> u(d), v(d);
    for (int j = 0; j < d; ++j) {
        u[j] = rng.normal();
        v[j] = rng.normal();
    }
    std::vector<std::vector<double>> ref;
    for (int i = 0; i < 80; ++i) {
        const double s = 2.0 * rng.normal(), t = rng.normal();
        std::vector<double> w(d);
        for (int j = 0; j < d; ++j) w[j] = s * u[j] + t * v[j];
        ref.push_back(std::move(w));
    }
    const PcaProjection p = pca2(ref, ref);
    bool pass =
        std::abs(p.explained_variance_ratio[0] + p.explained_variance_ratio[1] - 1.0) <= 1e-9;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (std::abs(p.generated[i][0] - p.reference[i][0]) > 1e-9) pass = false;
        if (std::abs(p.generated[i][1] - p.reference[i][1]) > 1e-9) pass = false;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "rank-2 PCA: ratio sum %.12f, self-projection matches",
                  p.explained_variance_ratio[0] + p.explained_variance_ratio[1]);
    report(10, pass, buf);
}

}  // namespace

int main(int argc, char** argv) {
    // config path for the desk-scale run; defaults to the shipped preset
    std::string desk_cfg = "configs/lv_desk.cfg";
    if (argc > 1) desk_cfg = argv[1];
    if (!fs::exists(desk_cfg)) {
        const fs::path alt = fs::path(__FILE__).parent_path().parent_path() / "configs" /
                             "lv_desk.cfg";
        if (fs::exists(alt)) desk_cfg = alt.string();
    }

    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criteria5_and_8(desk_cfg);
    criterion6();
    criterion7();
    criterion9();
    criterion10();

    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria failed\n", g_failures);
    return 1;
}
