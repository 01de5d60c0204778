#include "tpidm/physics.hpp"

#include <algorithm>
#include <cmath>

namespace tpidm {

// ---- Weight schedule -------------------------------------------------------

static double schedule_f(WeightKind kind, double z) {
    switch (kind) {
        case WeightKind::LogSigmoid:
            // log(sigmoid(z)), stable on both tails
            return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z));
        case WeightKind::HardSigmoid:
            return std::clamp(z / 6.0 + 0.5, 0.0, 1.0);
        case WeightKind::Sigmoid:
            return 1.0 / (1.0 + std::exp(-z));
        case WeightKind::Relu:
            return std::max(0.0, z);
    }
    throw contract_error("schedule_f: unknown kind");
}

static double z_of(WeightKind kind, int s, int T) {
    const double u = static_cast<double>(s) / static_cast<double>(T);
    if (kind == WeightKind::Relu) return u;
    return 6.0 * (2.0 * u - 1.0);
}

double pinn_weight_unclamped(int s, const WeightSchedule& sched) {
    require(s >= 1 && s <= sched.T, "pinn_weight: step out of range");
    return schedule_f(sched.kind, z_of(sched.kind, s, sched.T)) * (sched.m - sched.n) + sched.l;
}

double pinn_weight(int s, const WeightSchedule& sched) {
    return std::clamp(pinn_weight_unclamped(s, sched), 0.0, 1.0);
}

WeightSchedule make_weight_schedule(WeightKind kind, double m, double n, double l, int T) {
    require(T >= 1, "make_weight_schedule: T must be >= 1");
    WeightSchedule ws;
    ws.kind = kind;
    ws.m = m;
    ws.n = n;
    ws.l = l;
    ws.T = T;
    ws.lambda.resize(T);
    ws.lambda_bar.resize(T + 1);
    ws.lambda_bar[0] = 1.0;
    for (int s = 1; s <= T; ++s) {
        ws.lambda[s - 1] = pinn_weight(s, ws);
        ws.lambda_bar[s] = ws.lambda_bar[s - 1] * ws.lambda[s - 1];
    }
    return ws;
}

double cumulative_weight(int t, const WeightSchedule& sched) {
    require(t >= 0 && t <= sched.T, "cumulative_weight: t out of range");
    return sched.lambda_bar[t];
}

void default_weight_params(WeightKind kind, double& m, double& n, double& l) {
    switch (kind) {
        case WeightKind::LogSigmoid: m = 0.01; n = 0.1; l = 0.1; return;
        case WeightKind::HardSigmoid: m = 0.01; n = 1.0; l = 1.0; return;
        case WeightKind::Sigmoid: m = 0.01; n = 1.0; l = 1.0; return;
        case WeightKind::Relu: m = 0.001; n = 0.01; l = 0.9; return;
    }
    throw contract_error("default_weight_params: unknown kind");
}

// ---- Residuals -------------------------------------------------------------

std::vector<double> finite_diff(std::span<const double> series, double dt) {
    const int L = static_cast<int>(series.size());
    require(L >= 3, "finite_diff: need at least 3 points");
    require(dt > 0.0, "finite_diff: dt must be positive");
    std::vector<double> d(L);
    d[0] = (series[1] - series[0]) / dt;
    for (int i = 1; i + 1 < L; ++i) d[i] = (series[i + 1] - series[i - 1]) / (2.0 * dt);
    d[L - 1] = (series[L - 1] - series[L - 2]) / dt;
    return d;
}

int max_channel_index(const PhysicsModel& model) {
    return std::visit(
        [](const auto& m) -> int {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, LotkaVolterra>) {
                return std::max(m.ch_x, m.ch_y);
            } else if constexpr (std::is_same_v<M, OhmLaw>) {
                int mx = -1;
                for (int c : m.v_ch) mx = std::max(mx, c);
                for (int c : m.i_ch) mx = std::max(mx, c);
                return mx;
            } else if constexpr (std::is_same_v<M, EmpsIdm>) {
                return std::max(m.ch_tau, m.ch_q);
            } else {
                return std::max({m.ch_P, m.ch_V, m.ch_T, m.ch_m, m.ch_mdot, m.ch_Q});
            }
        },
        model);
}

static std::vector<double> extract_channel(std::span<const double> window, int L, int C, int ch) {
    std::vector<double> s(L);
    for (int i = 0; i < L; ++i) s[i] = window[static_cast<std::size_t>(i) * C + ch];
    return s;
}

std::vector<double> residual(const PhysicsModel& model, std::span<const double> window,
                             int L, int C, double dt) {
    require(static_cast<int>(window.size()) == L * C, "residual: window size mismatch");
    require(max_channel_index(model) < C, "residual: missing channel for physics model");
    std::vector<double> out;

    if (const auto* lv = std::get_if<LotkaVolterra>(&model)) {
        const auto x = extract_channel(window, L, C, lv->ch_x);
        const auto y = extract_channel(window, L, C, lv->ch_y);
        const auto xd = finite_diff(x, dt);
        const auto yd = finite_diff(y, dt);
        out.resize(static_cast<std::size_t>(2) * L);
        for (int i = 0; i < L; ++i) {
            out[i] = xd[i] - (lv->alpha * x[i] - lv->beta * x[i] * y[i]);
            out[L + i] = yd[i] - (lv->delta * x[i] * y[i] - lv->gamma * y[i]);
        }
    } else if (const auto* ohm = std::get_if<OhmLaw>(&model)) {
        require(ohm->v_ch.size() == ohm->i_ch.size() &&
                    ohm->v_ch.size() == ohm->resistance.size(),
                "residual: Ohm channel/resistance count mismatch");
        for (std::size_t k = 0; k < ohm->v_ch.size(); ++k) {
            const auto vd = finite_diff(extract_channel(window, L, C, ohm->v_ch[k]), dt);
            const auto id = finite_diff(extract_channel(window, L, C, ohm->i_ch[k]), dt);
            for (int i = 0; i < L; ++i) out.push_back(vd[i] - ohm->resistance[k] * id[i]);
        }
    } else if (const auto* emps = std::get_if<EmpsIdm>(&model)) {
        const auto tau = extract_channel(window, L, C, emps->ch_tau);
        const auto q = extract_channel(window, L, C, emps->ch_q);
        const auto qd = finite_diff(q, dt);
        const auto qdd = finite_diff(qd, dt);
        out.resize(L);
        for (int i = 0; i < L; ++i) {
            const double sgn = std::tanh(qd[i] / emps->sign_kappa);
            out[i] = tau[i] -
                     (emps->M * qdd[i] + emps->Fv * qd[i] + emps->Fc * sgn + emps->offset);
        }
    } else {
        const auto& gas = std::get<IdealGas>(model);
        const auto P = extract_channel(window, L, C, gas.ch_P);
        const auto V = extract_channel(window, L, C, gas.ch_V);
        const auto Tmp = extract_channel(window, L, C, gas.ch_T);
        const auto m = extract_channel(window, L, C, gas.ch_m);
        const auto mdot = extract_channel(window, L, C, gas.ch_mdot);
        const auto Q = extract_channel(window, L, C, gas.ch_Q);
        std::vector<double> v(L);
        for (int i = 0; i < L; ++i) v[i] = V[i] / m[i];
        const auto vd = finite_diff(v, dt);
        const auto Pd = finite_diff(P, dt);
        const auto Td = finite_diff(Tmp, dt);
        out.resize(static_cast<std::size_t>(2) * L);
        for (int i = 0; i < L; ++i) {
            out[i] = P[i] * vd[i] + v[i] * Pd[i] - gas.R * Td[i];
            out[L + i] = mdot[i] - gas.rho * Q[i];
        }
    }
    return out;
}

NodeId residual_tape(Tape& tape, const PhysicsModel& model,
                     const std::vector<NodeId>& channels, double dt) {
    require(max_channel_index(model) < static_cast<int>(channels.size()),
            "residual_tape: missing channel for physics model");
    auto sub = [&](NodeId a, NodeId b) { return tape.add(a, tape.affine(b, -1.0, 0.0)); };

    if (const auto* lv = std::get_if<LotkaVolterra>(&model)) {
        const NodeId x = channels[lv->ch_x];
        const NodeId y = channels[lv->ch_y];
        const NodeId xy = tape.mul(x, y);
        const NodeId rx = sub(tape.central_diff(x, dt),
                              sub(tape.affine(x, lv->alpha, 0.0), tape.affine(xy, lv->beta, 0.0)));
        const NodeId ry = sub(tape.central_diff(y, dt),
                              sub(tape.affine(xy, lv->delta, 0.0), tape.affine(y, lv->gamma, 0.0)));
        return tape.concat({rx, ry});
    }
    if (const auto* ohm = std::get_if<OhmLaw>(&model)) {
        std::vector<NodeId> parts;
        for (std::size_t k = 0; k < ohm->v_ch.size(); ++k) {
            const NodeId vd = tape.central_diff(channels[ohm->v_ch[k]], dt);
            const NodeId id = tape.central_diff(channels[ohm->i_ch[k]], dt);
            parts.push_back(sub(vd, tape.affine(id, ohm->resistance[k], 0.0)));
        }
        return tape.concat(parts);
    }
    if (const auto* emps = std::get_if<EmpsIdm>(&model)) {
        const NodeId tau = channels[emps->ch_tau];
        const NodeId qd = tape.central_diff(channels[emps->ch_q], dt);
        const NodeId qdd = tape.central_diff(qd, dt);
        const NodeId sgn = tape.tanh_op(tape.affine(qd, 1.0 / emps->sign_kappa, 0.0));
        NodeId idm = tape.add(tape.affine(qdd, emps->M, 0.0), tape.affine(qd, emps->Fv, 0.0));
        idm = tape.add(idm, tape.affine(sgn, emps->Fc, emps->offset));
        return sub(tau, idm);
    }
    const auto& gas = std::get<IdealGas>(model);
    const NodeId v = tape.mul(channels[gas.ch_V], tape.reciprocal(channels[gas.ch_m]));
    const NodeId r1 = sub(tape.add(tape.mul(channels[gas.ch_P], tape.central_diff(v, dt)),
                                   tape.mul(v, tape.central_diff(channels[gas.ch_P], dt))),
                          tape.affine(tape.central_diff(channels[gas.ch_T], dt), gas.R, 0.0));
    const NodeId r2 = sub(channels[gas.ch_mdot], tape.affine(channels[gas.ch_Q], gas.rho, 0.0));
    return tape.concat({r1, r2});
}

// ---- Physics-informed loss -------------------------------------------------

double pinn_loss(const std::vector<std::vector<double>>& x0_hat_batch,
                 const std::vector<int>& t_batch, const PhysicsModel& model,
                 const WeightSchedule& weights, const ScaleParams& scale,
                 int L, int C, double dt) {
    require(x0_hat_batch.size() == t_batch.size(), "pinn_loss: batch size mismatch");
    require(!x0_hat_batch.empty(), "pinn_loss: empty batch");
    require(static_cast<int>(scale.min.size()) == C, "pinn_loss: scale/channel mismatch");
    double total = 0.0;
    for (std::size_t b = 0; b < x0_hat_batch.size(); ++b) {
        const double lam = cumulative_weight(t_batch[b], weights);
        if (lam == 0.0) continue;
        std::vector<double> phys(x0_hat_batch[b].size());
        for (int i = 0; i < L; ++i)
            for (int c = 0; c < C; ++c) {
                const std::size_t k = static_cast<std::size_t>(i) * C + c;
                phys[k] = scale.from_unit(x0_hat_batch[b][k], c);
            }
        const auto res = residual(model, phys, L, C, dt);
        double msq = 0.0;
        for (double r : res) msq += r * r;
        msq /= static_cast<double>(res.size());
        total += lam * msq;
    }
    return total / static_cast<double>(x0_hat_batch.size());
}

NodeId pinn_loss_tape(Tape& tape, NodeId x0_hat, int t, const PhysicsModel& model,
                      const WeightSchedule& weights, const ScaleParams& scale,
                      int L, int C, double dt) {
    require(static_cast<int>(tape.size(x0_hat)) == L * C, "pinn_loss_tape: window size mismatch");
    require(static_cast<int>(scale.min.size()) == C, "pinn_loss_tape: scale/channel mismatch");
    const double lam = cumulative_weight(t, weights);
    // Channel series in physical units: gather per-channel slices, then unscale.
    std::vector<NodeId> channels(C);
    for (int c = 0; c < C; ++c) {
        std::vector<NodeId> steps(L);
        for (int i = 0; i < L; ++i) steps[i] = tape.slice(x0_hat, i * C + c, 1);
        channels[c] = tape.affine(tape.concat(steps), scale.affine_a(c), scale.affine_b(c));
    }
    const NodeId res = residual_tape(tape, model, channels, dt);
    const NodeId msq = tape.mean(tape.mul(res, res));
    return tape.affine(msq, lam, 0.0);
}

}  // namespace tpidm
