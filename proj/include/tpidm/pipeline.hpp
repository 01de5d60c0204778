#ifndef TPIDM_PIPELINE_HPP
#define TPIDM_PIPELINE_HPP

#include <string>

#include "tpidm/checkpoint.hpp"
#include "tpidm/config.hpp"
#include "tpidm/diffusion.hpp"
#include "tpidm/physics.hpp"
#include "tpidm/simulate.hpp"
#include "tpidm/timeseries.hpp"

namespace tpidm {

// Everything a detection experiment needs, derived deterministically from a
// config: labeled series in physical units, scale fitted on the normal-only
// training region, scaled train/val windows and a sampled eval set.
struct Dataset {
    TimeSeries raw;
    ScaleParams scale;
    WindowSet train, val;
    WindowSet eval;
};

TimeSeries generate_series(const ExperimentConfig& cfg);
Dataset build_dataset(const ExperimentConfig& cfg);
// `series` must carry labels; training windows come from the (label-filtered)
// region before eval_start, eval windows from the region after it.
Dataset build_dataset_from_series(const ExperimentConfig& cfg, const TimeSeries& series);

PhysicsModel physics_from_config(const ExperimentConfig& cfg);
WeightSchedule schedule_from_config(const ExperimentConfig& cfg);
DenoiserModel model_from_config(const ExperimentConfig& cfg, int channels);
DenoiserModel model_from_checkpoint(const Checkpoint& ckpt, int channels);
std::vector<std::string> channel_names_from_config(const ExperimentConfig& cfg);

// Exclusive advisory lock on an output directory; throws io_error if another
// invocation holds it.
class DirLock {
public:
    explicit DirLock(const std::string& out_dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
};

// CLI entry points; each returns the process exit code.
int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_train(const ExperimentConfig& cfg, const std::string& data_csv,
              const std::string& out_dir);
int cmd_detect(const std::string& checkpoint_path, const std::string& data_csv,
               const ExperimentConfig* cfg_override, const std::string& out_dir,
               const std::uint64_t* seed_override = nullptr);
int cmd_sample(const std::string& checkpoint_path, int n, std::uint64_t seed,
               const std::string& out_dir);
int cmd_pca(const std::string& checkpoint_path, const std::string& generated_csv, int n,
            std::uint64_t seed, const std::string& out_dir);
int cmd_bench(const std::string& checkpoint_path, int n, const std::string& out_dir);

}  // namespace tpidm

#endif
