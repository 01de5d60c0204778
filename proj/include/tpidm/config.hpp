#ifndef TPIDM_CONFIG_HPP
#define TPIDM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tpidm/common.hpp"

namespace tpidm {

// One flat key-value config per experiment. Unknown keys are rejected on
// load; serialize() emits every key in a fixed order so a config round-trips
// byte-identically through a checkpoint's metadata echo.
struct ExperimentConfig {
    // dataset
    std::string dataset_kind = "lv";  // lv | emps | gas | csv
    std::string csv_path;
    std::string csv_columns;  // comma-separated channel names for csv datasets
    double dt = 0.01;
    std::uint64_t n_points = 100000;
    int window = 100;
    double split_ratio = 0.9;
    std::uint64_t data_seed = 7;
    std::uint64_t eval_normal = 700;
    std::uint64_t eval_anomaly = 300;
    std::uint64_t eval_start = 50000;  // series index where the eval region begins
    int anomaly_segments = 10;
    std::uint64_t anomaly_length = 2000;
    double anomaly_scale = 1.5;
    double lv_alpha = 1.1, lv_beta = 0.4, lv_delta = 0.4, lv_gamma = 0.1;
    double lv_x0 = 10.0, lv_y0 = 2.0;
    double emps_mass = 95.0, emps_fv = 200.0, emps_fc = 20.0, emps_offset = 0.0;
    double gas_r = 287.0, gas_rho = 1.2;

    // model
    std::string mode = "epsilon";  // epsilon | x0
    int T = 100;
    double sigma1 = 1e-4, sigmaT = 0.05;
    std::string enc_hidden = "8,16,32";
    std::string dec_hidden = "16,8,2";

    // training
    int epochs = 500;
    int batch = 128;
    double lr = 1e-4;
    double l2 = 1e-6;
    std::uint64_t train_seed = 1;
    std::uint64_t windows_per_epoch = 0;  // 0 = every training window each epoch

    // physics
    bool physics_enabled = true;
    std::string physics_kind = "lv";  // lv | ohm | emps | gas
    std::string schedule_kind = "log-sigmoid";
    // negative = use the schedule kind's table default
    double sched_m = -1.0, sched_n = -1.0, sched_l = -1.0;
    double ohm_resistance = 2.0;

    // detection
    double trim = 0.1;
    double detect_k = 1.5;
    int elbo_stride = 1;
    std::uint64_t detect_seed = 99;

    void validate() const;
    std::string serialize() const;
    bool operator==(const ExperimentConfig& other) const {
        return serialize() == other.serialize();
    }

    std::vector<int> enc_hidden_sizes() const;
    std::vector<int> dec_hidden_sizes() const;
    std::vector<std::string> csv_column_names() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::vector<int> parse_int_list(const std::string& csv);

}  // namespace tpidm

#endif
