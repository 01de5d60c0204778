#include "tpidm/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tpidm/adam.hpp"
#include "tpidm/fused.hpp"
#include "tpidm/parallel.hpp"
#include "tpidm/rng.hpp"
#include "tpidm/tape.hpp"

namespace tpidm {

namespace {

struct BatchItem {
    std::size_t window = 0;
    int t = 1;
    std::vector<double> x_t;      // noised window
    std::vector<double> target;   // eps or x0, per parameterization
    std::vector<double> x0_base;  // x_t / sqrt(abar_t), for the x0_hat node
};

struct WorkerAccum {
    std::vector<double> grads;
    double l_dm = 0.0, l_pi = 0.0;
};

}  // namespace

TrainResult train_denoiser(DenoiserModel& model, const WindowSet& train,
                           const NoiseSchedule& sched, const PhysicsModel* physics,
                           const WeightSchedule* weights, const ScaleParams& scale, double dt,
                           const TrainOptions& opts, std::ostream* log_csv) {
    require(!train.windows.empty(), "train_denoiser: empty training set");
    require(train.channels == model.cfg.channels && train.window_len == model.cfg.window_len,
            "train_denoiser: window shape does not match the model");
    require(physics == nullptr || weights != nullptr,
            "train_denoiser: physics loss requires a weight schedule");

    const std::size_t n = train.windows.size();
    const std::size_t dim =
        static_cast<std::size_t>(train.window_len) * static_cast<std::size_t>(train.channels);
    const bool eps_mode = model.cfg.mode == Parameterization::Epsilon;

    Rng rng(opts.seed);
    AdamState adam(model.params.size(), opts.lr, opts.l2);

    const int workers = thread_count();
    std::vector<WorkerAccum> acc(workers);
    for (auto& a : acc) a.grads.assign(model.params.size(), 0.0);
    std::vector<double> gradsum(model.params.size(), 0.0);

    TrainResult result;
    if (log_csv) *log_csv << "epoch,l_dm,l_pi,total\n";

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        rng.shuffle(order);
        std::size_t use = n;
        if (opts.windows_per_epoch > 0 && opts.windows_per_epoch < n)
            use = opts.windows_per_epoch;

        double ep_dm = 0.0, ep_pi = 0.0;
        std::size_t n_batches = 0;

        for (std::size_t begin = 0; begin < use; begin += static_cast<std::size_t>(opts.batch)) {
            const std::size_t end = std::min(use, begin + static_cast<std::size_t>(opts.batch));
            const std::size_t bsz = end - begin;

            // Sequential draws keep results independent of the worker count.
            std::vector<BatchItem> items(bsz);
            for (std::size_t i = 0; i < bsz; ++i) {
                BatchItem& it = items[i];
                it.window = order[begin + i];
                it.t = static_cast<int>(rng.uniform_int(1, sched.T));
                const std::vector<double> eps = rng.normal_vec(dim);
                const auto& x0 = train.windows[it.window];
                const double sa = std::sqrt(sched.abar(it.t));
                const double sn = std::sqrt(1.0 - sched.abar(it.t));
                it.x_t.resize(dim);
                it.x0_base.resize(dim);
                for (std::size_t j = 0; j < dim; ++j) {
                    it.x_t[j] = sa * x0[j] + sn * eps[j];
                    it.x0_base[j] = it.x_t[j] / sa;
                }
                it.target = eps_mode ? eps : x0;
            }

            for (auto& a : acc) {
                std::fill(a.grads.begin(), a.grads.end(), 0.0);
                a.l_dm = a.l_pi = 0.0;
            }
            const double inv_b = 1.0 / static_cast<double>(bsz);

            // Fixed-width lane groups keep the gradient reduction order
            // independent of the worker count: workers own contiguous group
            // ranges and each group's contribution is accumulated whole.
            constexpr std::size_t kLanes = 32;
            const std::size_t n_groups = (bsz + kLanes - 1) / kLanes;

            try {
                parallel_blocks(n_groups, [&](int w, std::size_t glo, std::size_t ghi) {
                    Tape tape;
                    BatchDenoiserCache cache;
                    std::vector<const double*> xs;
                    std::vector<int> ts;
                    std::vector<double> dpred, x0_hat(dim);
                    for (std::size_t g = glo; g < ghi; ++g) {
                        const std::size_t lo = g * kLanes;
                        const std::size_t hi = std::min(bsz, lo + kLanes);
                        const int lanes = static_cast<int>(hi - lo);
                        xs.resize(lanes);
                        ts.resize(lanes);
                        for (int b = 0; b < lanes; ++b) {
                            xs[b] = items[lo + b].x_t.data();
                            ts[b] = items[lo + b].t;
                        }
                        const auto& pred =
                            denoise_fwd_batch(model, xs, ts, sched.T, cache);
                        dpred.assign(pred.size(), 0.0);
                        for (int b = 0; b < lanes; ++b) {
                            const BatchItem& it = items[lo + b];
                            double l_dm = 0.0;
                            for (std::size_t j = 0; j < dim; ++j) {
                                const double d = pred[j * lanes + b] - it.target[j];
                                l_dm += d * d;
                                dpred[j * lanes + b] = 2.0 * d;
                            }
                            double lpi_val = 0.0;
                            if (physics != nullptr &&
                                cumulative_weight(it.t, *weights) > 0.0) {
                                // x0_hat is affine in the prediction; chain the
                                // physics gradient into dpred through that map.
                                double a_coef = 1.0;
                                if (eps_mode) {
                                    const double sa = std::sqrt(sched.abar(it.t));
                                    a_coef = -std::sqrt(1.0 - sched.abar(it.t)) / sa;
                                    for (std::size_t j = 0; j < dim; ++j)
                                        x0_hat[j] =
                                            a_coef * pred[j * lanes + b] + it.x0_base[j];
                                } else {
                                    for (std::size_t j = 0; j < dim; ++j)
                                        x0_hat[j] = pred[j * lanes + b];
                                }
                                tape.clear();
                                const NodeId leaf = tape.param_leaf(x0_hat);
                                const NodeId l_pi =
                                    pinn_loss_tape(tape, leaf, it.t, *physics, *weights,
                                                   scale, train.window_len, train.channels,
                                                   dt);
                                tape.backward(l_pi);
                                lpi_val = tape.value(l_pi)[0];
                                const auto& gl = tape.grad(leaf);
                                if (!gl.empty())
                                    for (std::size_t j = 0; j < dim; ++j)
                                        dpred[j * lanes + b] += a_coef * gl[j];
                            }
                            if (!std::isfinite(l_dm + lpi_val))
                                throw numeric_error("non-finite loss for window " +
                                                    std::to_string(it.window));
                            acc[w].l_dm += l_dm * inv_b;
                            acc[w].l_pi += lpi_val * inv_b;
                        }
                        denoise_bwd_batch(model, cache, dpred, inv_b, acc[w].grads);
                    }
                });
            } catch (const numeric_error& e) {
                throw numeric_error(std::string(e.what()) + "; training diverged in epoch " +
                                    std::to_string(epoch) + ", last finite epoch " +
                                    std::to_string(epoch - 1));
            }

            std::fill(gradsum.begin(), gradsum.end(), 0.0);
            double b_dm = 0.0, b_pi = 0.0;
            for (const auto& a : acc) {
                for (std::size_t j = 0; j < gradsum.size(); ++j) gradsum[j] += a.grads[j];
                b_dm += a.l_dm;
                b_pi += a.l_pi;
            }
            if (!std::isfinite(b_dm + b_pi))
                throw numeric_error("training diverged in epoch " + std::to_string(epoch) +
                                    ", last finite epoch " + std::to_string(epoch - 1));

            adam_step(model.params, gradsum, adam);
            ++result.steps;
            ep_dm += b_dm;
            ep_pi += b_pi;
            ++n_batches;
        }

        EpochLog log;
        log.epoch = epoch;
        log.l_dm = ep_dm / static_cast<double>(n_batches);
        log.l_pi = ep_pi / static_cast<double>(n_batches);
        log.total = log.l_dm + log.l_pi;
        result.log.push_back(log);
        if (log_csv)
            *log_csv << epoch << ',' << log.l_dm << ',' << log.l_pi << ',' << log.total << '\n';
    }
    return result;
}

}  // namespace tpidm
