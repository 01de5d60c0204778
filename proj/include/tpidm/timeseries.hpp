#ifndef TPIDM_TIMESERIES_HPP
#define TPIDM_TIMESERIES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tpidm/common.hpp"

namespace tpidm {

// Multichannel uniformly-sampled signal with per-point anomaly labels.
struct TimeSeries {
    std::vector<std::string> names;
    std::vector<std::vector<double>> channels;
    std::vector<std::uint8_t> labels;  // 0 = normal, 1 = anomalous
    std::vector<std::string> units;
    double dt = 0.0;

    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    std::size_t channel_count() const { return channels.size(); }
    void validate() const;
};

// Per-channel min/max for the affine map onto [-1, 1].
struct ScaleParams {
    std::vector<double> min, max;

    double to_unit(double x, std::size_t ch) const {
        return 2.0 * (x - min[ch]) / (max[ch] - min[ch]) - 1.0;
    }
    double from_unit(double u, std::size_t ch) const {
        return (u + 1.0) * 0.5 * (max[ch] - min[ch]) + min[ch];
    }
    // from_unit as u * a + b, for building linear tape ops.
    double affine_a(std::size_t ch) const { return 0.5 * (max[ch] - min[ch]); }
    double affine_b(std::size_t ch) const { return min[ch] + 0.5 * (max[ch] - min[ch]); }
};

ScaleParams fit_scale(const TimeSeries& series);
TimeSeries scale_to_unit(const TimeSeries& series, const ScaleParams& params);
TimeSeries unscale(const TimeSeries& scaled, const ScaleParams& params);

// Fixed-length stride-1 windows, [L x C] time-major, labeled anomalous iff
// any covered point is.
struct WindowSet {
    int window_len = 0;
    int channels = 0;
    std::vector<std::vector<double>> windows;
    std::vector<std::uint8_t> labels;
    std::vector<std::size_t> source_index;  // start index in the source series
};

WindowSet make_windows(const TimeSeries& series, int window_len);

// Contiguous split: first `ratio` of windows train, remainder validation.
void split_train_val(const WindowSet& all, double ratio, WindowSet& train, WindowSet& val);

// Seeded sample of n_normal windows from the normal pool and n_anomalous
// from the anomalous pool, without replacement.
WindowSet build_eval_set(const WindowSet& normal_pool, const WindowSet& anomalous_pool,
                         std::size_t n_normal, std::size_t n_anomalous, std::uint64_t seed);

// CSV: UTF-8, comma-separated, header row, optional integer `label` column.
struct ColumnSpec {
    std::vector<std::string> names;  // required numeric columns, in order
    bool expect_label = false;
};
TimeSeries load_csv(const std::string& path, const ColumnSpec& spec, double dt);
void save_csv(const std::string& path, const TimeSeries& series);

}  // namespace tpidm

#endif
