#include "tpidm/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tpidm/rng.hpp"

namespace tpidm {

void TimeSeries::validate() const {
    require(dt > 0.0, "TimeSeries: dt must be positive");
    require(!channels.empty(), "TimeSeries: no channels");
    const std::size_t n = channels[0].size();
    for (const auto& ch : channels)
        require(ch.size() == n, "TimeSeries: channel length mismatch");
    require(labels.size() == n, "TimeSeries: label length mismatch");
    require(names.size() == channels.size(), "TimeSeries: name count mismatch");
}

ScaleParams fit_scale(const TimeSeries& series) {
    ScaleParams p;
    for (std::size_t c = 0; c < series.channel_count(); ++c) {
        const auto [lo, hi] = std::minmax_element(series.channels[c].begin(),
                                                  series.channels[c].end());
        if (!(*hi > *lo))
            throw contract_error("fit_scale: constant channel '" + series.names[c] + "'");
        p.min.push_back(*lo);
        p.max.push_back(*hi);
    }
    return p;
}

TimeSeries scale_to_unit(const TimeSeries& series, const ScaleParams& params) {
    require(params.min.size() == series.channel_count(), "scale_to_unit: params mismatch");
    TimeSeries out = series;
    for (std::size_t c = 0; c < out.channel_count(); ++c)
        for (auto& x : out.channels[c]) x = params.to_unit(x, c);
    return out;
}

TimeSeries unscale(const TimeSeries& scaled, const ScaleParams& params) {
    require(params.min.size() == scaled.channel_count(), "unscale: params mismatch");
    TimeSeries out = scaled;
    for (std::size_t c = 0; c < out.channel_count(); ++c)
        for (auto& x : out.channels[c]) x = params.from_unit(x, c);
    return out;
}

WindowSet make_windows(const TimeSeries& series, int window_len) {
    series.validate();
    const std::size_t n = series.length();
    require(window_len >= 1 && static_cast<std::size_t>(window_len) <= n,
            "make_windows: window longer than series");
    const int C = static_cast<int>(series.channel_count());
    WindowSet ws;
    ws.window_len = window_len;
    ws.channels = C;
    const std::size_t count = n - window_len + 1;
    ws.windows.reserve(count);
    for (std::size_t start = 0; start < count; ++start) {
        std::vector<double> w(static_cast<std::size_t>(window_len) * C);
        std::uint8_t label = 0;
        for (int i = 0; i < window_len; ++i) {
            for (int c = 0; c < C; ++c)
                w[static_cast<std::size_t>(i) * C + c] = series.channels[c][start + i];
            label |= series.labels[start + i];
        }
        ws.windows.push_back(std::move(w));
        ws.labels.push_back(label);
        ws.source_index.push_back(start);
    }
    return ws;
}

void split_train_val(const WindowSet& all, double ratio, WindowSet& train, WindowSet& val) {
    require(ratio > 0.0 && ratio < 1.0, "split_train_val: ratio must be in (0,1)");
    const std::size_t n = all.windows.size();
    const std::size_t n_train = static_cast<std::size_t>(ratio * static_cast<double>(n));
    require(n_train >= 1 && n_train < n, "split_train_val: degenerate split");
    train = WindowSet{all.window_len, all.channels, {}, {}, {}};
    val = WindowSet{all.window_len, all.channels, {}, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        WindowSet& dst = (i < n_train) ? train : val;
        dst.windows.push_back(all.windows[i]);
        dst.labels.push_back(all.labels[i]);
        dst.source_index.push_back(all.source_index[i]);
    }
}

static void sample_into(const WindowSet& pool, std::size_t n, Rng& rng, WindowSet& out) {
    std::vector<std::size_t> idx(pool.windows.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (std::size_t i = 0; i < n; ++i) {
        out.windows.push_back(pool.windows[idx[i]]);
        out.labels.push_back(pool.labels[idx[i]]);
        out.source_index.push_back(pool.source_index[idx[i]]);
    }
}

WindowSet build_eval_set(const WindowSet& normal_pool, const WindowSet& anomalous_pool,
                         std::size_t n_normal, std::size_t n_anomalous, std::uint64_t seed) {
    if (normal_pool.windows.size() < n_normal)
        throw contract_error("build_eval_set: normal pool has " +
                             std::to_string(normal_pool.windows.size()) + " windows, need " +
                             std::to_string(n_normal));
    if (anomalous_pool.windows.size() < n_anomalous)
        throw contract_error("build_eval_set: anomalous pool has " +
                             std::to_string(anomalous_pool.windows.size()) + " windows, need " +
                             std::to_string(n_anomalous));
    require(normal_pool.window_len == anomalous_pool.window_len &&
                normal_pool.channels == anomalous_pool.channels,
            "build_eval_set: pool shape mismatch");
    WindowSet out{normal_pool.window_len, normal_pool.channels, {}, {}, {}};
    Rng rng(seed);
    sample_into(normal_pool, n_normal, rng, out);
    sample_into(anomalous_pool, n_anomalous, rng, out);
    return out;
}

TimeSeries load_csv(const std::string& path, const ColumnSpec& spec, double dt) {
    std::ifstream in(path);
    if (!in) throw io_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> headers;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) headers.push_back(cell);
    }
    std::vector<int> col_of(spec.names.size(), -1);
    int label_col = -1;
    for (std::size_t h = 0; h < headers.size(); ++h) {
        if (headers[h] == "label") label_col = static_cast<int>(h);
        for (std::size_t c = 0; c < spec.names.size(); ++c)
            if (headers[h] == spec.names[c]) col_of[c] = static_cast<int>(h);
    }
    for (std::size_t c = 0; c < spec.names.size(); ++c)
        if (col_of[c] < 0)
            throw io_error("load_csv: missing column '" + spec.names[c] + "' in " + path);
    if (spec.expect_label && label_col < 0)
        throw io_error("load_csv: missing column 'label' in " + path);

    TimeSeries ts;
    ts.dt = dt;
    ts.names = spec.names;
    ts.units.assign(spec.names.size(), "");
    ts.channels.assign(spec.names.size(), {});

    std::size_t row = 1;
    std::vector<std::string> cells;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        cells.clear();
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != headers.size())
            throw io_error("load_csv: ragged row " + std::to_string(row) + " in " + path);
        auto parse = [&](int col) {
            double v;
            const std::string& s = cells[col];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
                throw io_error("load_csv: non-numeric cell at row " + std::to_string(row) +
                               ", column '" + headers[col] + "' in " + path);
            return v;
        };
        for (std::size_t c = 0; c < spec.names.size(); ++c)
            ts.channels[c].push_back(parse(col_of[c]));
        ts.labels.push_back(label_col >= 0 ? static_cast<std::uint8_t>(parse(label_col) != 0.0)
                                           : std::uint8_t{0});
    }
    ts.validate();
    return ts;
}

void save_csv(const std::string& path, const TimeSeries& series) {
    series.validate();
    std::ofstream out(path);
    if (!out) throw io_error("save_csv: cannot open " + path);
    for (std::size_t c = 0; c < series.names.size(); ++c) {
        if (c) out << ',';
        out << series.names[c];
    }
    out << ",label\n";
    char buf[32];
    const std::size_t n = series.length();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < series.channel_count(); ++c) {
            if (c) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", series.channels[c][i]);
            out << buf;
        }
        out << ',' << static_cast<int>(series.labels[i]) << '\n';
    }
    if (!out) throw io_error("save_csv: write failed for " + path);
}

}  // namespace tpidm
