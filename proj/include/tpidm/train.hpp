#ifndef TPIDM_TRAIN_HPP
#define TPIDM_TRAIN_HPP

#include <cstdint>
#include <ostream>
#include <vector>

#include "tpidm/diffusion.hpp"
#include "tpidm/lstm.hpp"
#include "tpidm/physics.hpp"
#include "tpidm/timeseries.hpp"

namespace tpidm {

struct EpochLog {
    int epoch = 0;       // 1-based
    double l_dm = 0.0;   // epoch mean of the batch diffusion losses
    double l_pi = 0.0;   // epoch mean of the batch physics losses (0 when disabled)
    double total = 0.0;
};

struct TrainOptions {
    int epochs = 80;
    int batch = 128;
    double lr = 1e-4;
    double l2 = 1e-6;
    std::uint64_t seed = 1;
    std::uint64_t windows_per_epoch = 0;  // 0 = every training window each epoch
};

struct TrainResult {
    std::vector<EpochLog> log;
    std::uint64_t steps = 0;  // optimizer steps taken
};

// Composite-loss training: per batch element the diffusion loss and the
// physics loss share the same (t, eps) draw. physics == nullptr trains the
// plain diffusion model. Windows are in scaled units; `scale` maps back to
// physical units for the residuals. Throws numeric_error if the loss stops
// being finite, naming the last finite epoch. Optional CSV log stream gets
// header "epoch,l_dm,l_pi,total".
TrainResult train_denoiser(DenoiserModel& model, const WindowSet& train,
                           const NoiseSchedule& sched, const PhysicsModel* physics,
                           const WeightSchedule* weights, const ScaleParams& scale, double dt,
                           const TrainOptions& opts, std::ostream* log_csv = nullptr);

}  // namespace tpidm

#endif
