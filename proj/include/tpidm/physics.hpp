#ifndef TPIDM_PHYSICS_HPP
#define TPIDM_PHYSICS_HPP

#include <span>
#include <variant>
#include <vector>

#include "tpidm/tape.hpp"
#include "tpidm/timeseries.hpp"

namespace tpidm {

// ---- Per-step physics-loss weight schedule -------------------------------

enum class WeightKind { LogSigmoid, HardSigmoid, Sigmoid, Relu };

// lambda_s = clamp(f(z(s)) * (m - n) + l, 0, 1) with z = 6*(2s/T - 1) for the
// sigmoid family and z = s/T for relu. lambda_bar_t = prod_{s<=t} lambda_s,
// with the empty product lambda_bar_0 = 1.
struct WeightSchedule {
    WeightKind kind = WeightKind::LogSigmoid;
    double m = 0.01, n = 0.1, l = 0.1;
    int T = 100;
    std::vector<double> lambda;      // index s-1, s in 1..T
    std::vector<double> lambda_bar;  // index t, t in 0..T
};

WeightSchedule make_weight_schedule(WeightKind kind, double m, double n, double l, int T);

double pinn_weight(int s, const WeightSchedule& sched);
double pinn_weight_unclamped(int s, const WeightSchedule& sched);
double cumulative_weight(int t, const WeightSchedule& sched);

// Table defaults per schedule kind.
void default_weight_params(WeightKind kind, double& m, double& n, double& l);

// ---- Physics models and residuals ----------------------------------------

struct LotkaVolterra {
    double alpha = 1.1, beta = 0.4, delta = 0.4, gamma = 0.1;
    int ch_x = 0, ch_y = 1;
};

struct OhmLaw {
    std::vector<int> v_ch, i_ch;        // paired voltage/current channels
    std::vector<double> resistance;     // R per pair
};

struct EmpsIdm {
    double M = 95.0, Fv = 200.0, Fc = 20.0, offset = 0.0;
    int ch_tau = 0, ch_q = 1;
    double sign_kappa = 1e-3;  // tanh(qdot/kappa) smoothing in the differentiable path
};

struct IdealGas {
    double R = 287.0, rho = 1.2;
    int ch_P = 0, ch_V = 1, ch_T = 2, ch_m = 3, ch_mdot = 4, ch_Q = 5;
};

using PhysicsModel = std::variant<LotkaVolterra, OhmLaw, EmpsIdm, IdealGas>;

// Central differences interior, one-sided at the ends.
std::vector<double> finite_diff(std::span<const double> series, double dt);

// Per-timestep residuals of the governing equations on a physical-unit
// window, concatenated over residual components. Uses exact sign() for EMPS.
std::vector<double> residual(const PhysicsModel& model, std::span<const double> window,
                             int L, int C, double dt);

// Differentiable residual on the tape from per-channel series nodes
// (physical units, length L each). EMPS sign() is smoothed as tanh(x/kappa).
NodeId residual_tape(Tape& tape, const PhysicsModel& model,
                     const std::vector<NodeId>& channels, double dt);

int max_channel_index(const PhysicsModel& model);

// ---- Physics-informed loss ------------------------------------------------

// Mean over the batch of lambda_bar_{t_i} * mean squared residual of element
// i's x0_hat (rescaled to physical units via `scale`). Non-differentiable
// reference path; the training tape builds the same expression differentiably.
double pinn_loss(const std::vector<std::vector<double>>& x0_hat_batch,
                 const std::vector<int>& t_batch, const PhysicsModel& model,
                 const WeightSchedule& weights, const ScaleParams& scale,
                 int L, int C, double dt);

// Builds lambda_bar_t * mean(residual^2) on the tape for one window whose
// [L*C] time-major node `x0_hat` is in scaled units.
NodeId pinn_loss_tape(Tape& tape, NodeId x0_hat, int t, const PhysicsModel& model,
                      const WeightSchedule& weights, const ScaleParams& scale,
                      int L, int C, double dt);

}  // namespace tpidm

#endif
