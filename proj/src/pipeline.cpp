#include "tpidm/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "tpidm/detect.hpp"
#include "tpidm/rng.hpp"
#include "tpidm/train.hpp"

namespace tpidm {

namespace {

std::vector<AnomalySegment> plan_segments(const ExperimentConfig& cfg) {
    std::vector<AnomalySegment> segments;
    if (cfg.anomaly_segments == 0) return segments;
    const std::uint64_t region = cfg.n_points - cfg.eval_start;
    const std::uint64_t spacing = region / static_cast<std::uint64_t>(cfg.anomaly_segments);
    require(cfg.anomaly_length <= spacing,
            "config: anomaly segments of length " + std::to_string(cfg.anomaly_length) +
                " do not fit " + std::to_string(cfg.anomaly_segments) +
                " times into the eval region of " + std::to_string(region) + " points");
    for (int i = 0; i < cfg.anomaly_segments; ++i) {
        AnomalySegment s;
        s.start = cfg.eval_start + static_cast<std::uint64_t>(i) * spacing +
                  (spacing - cfg.anomaly_length) / 2;
        s.length = cfg.anomaly_length;
        s.scale = cfg.anomaly_scale;
        segments.push_back(s);
    }
    return segments;
}

TimeSeries slice_series(const TimeSeries& s, std::size_t begin, std::size_t end) {
    TimeSeries out;
    out.names = s.names;
    out.units = s.units;
    out.dt = s.dt;
    out.channels.resize(s.channels.size());
    for (std::size_t c = 0; c < s.channels.size(); ++c)
        out.channels[c].assign(s.channels[c].begin() + static_cast<std::ptrdiff_t>(begin),
                               s.channels[c].begin() + static_cast<std::ptrdiff_t>(end));
    out.labels.assign(s.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      s.labels.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

WindowSet filter_windows(const WindowSet& in, bool keep_label) {
    WindowSet out;
    out.window_len = in.window_len;
    out.channels = in.channels;
    for (std::size_t i = 0; i < in.windows.size(); ++i) {
        if ((in.labels[i] != 0) != keep_label) continue;
        out.windows.push_back(in.windows[i]);
        out.labels.push_back(in.labels[i]);
        out.source_index.push_back(in.source_index[i]);
    }
    return out;
}

int channel_count_from_config(const ExperimentConfig& cfg) {
    if (cfg.dataset_kind == "lv") return 2;
    if (cfg.dataset_kind == "emps") return 3;
    if (cfg.dataset_kind == "gas") return 6;
    return static_cast<int>(cfg.csv_column_names().size());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw io_error("write failed for '" + path + "'");
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// "window,step,<channels>" layout used by cmd_sample.
std::vector<std::vector<double>> load_samples_csv(const std::string& path, int L, int C) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open generated-windows CSV '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw io_error("empty generated-windows CSV '" + path + "'");
    std::vector<std::vector<double>> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (static_cast<int>(row.size()) != C + 2)
            throw io_error("generated-windows CSV '" + path + "': expected " +
                           std::to_string(C + 2) + " columns, got " +
                           std::to_string(row.size()));
        const auto w = static_cast<std::size_t>(row[0]);
        const auto step = static_cast<std::size_t>(row[1]);
        if (w >= out.size()) out.resize(w + 1, std::vector<double>(static_cast<std::size_t>(L) * C, 0.0));
        for (int c = 0; c < C; ++c)
            out[w][step * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)] =
                row[static_cast<std::size_t>(c) + 2];
    }
    if (out.empty()) throw io_error("generated-windows CSV '" + path + "' holds no windows");
    return out;
}

}  // namespace

TimeSeries generate_series(const ExperimentConfig& cfg) {
    const auto segments = plan_segments(cfg);
    if (cfg.dataset_kind == "lv") {
        LvParams p{cfg.lv_alpha, cfg.lv_beta, cfg.lv_delta, cfg.lv_gamma};
        return simulate_lv_with_anomalies(p, cfg.lv_x0, cfg.lv_y0, cfg.n_points, cfg.dt,
                                          segments);
    }
    if (cfg.dataset_kind == "emps") {
        TimeSeries s = simulate_emps(cfg.emps_mass, cfg.emps_fv, cfg.emps_fc, cfg.emps_offset,
                                     EmpsProfile{}, cfg.n_points, cfg.dt);
        return inject_amplitude_anomaly(s, segments, cfg.anomaly_scale);
    }
    if (cfg.dataset_kind == "gas") {
        TimeSeries s = simulate_gas(cfg.gas_r, cfg.gas_rho, GasProfile{}, cfg.n_points, cfg.dt);
        return inject_amplitude_anomaly(s, segments, cfg.anomaly_scale);
    }
    throw contract_error("generate_series: dataset_kind '" + cfg.dataset_kind +
                         "' is not a generator");
}

Dataset build_dataset_from_series(const ExperimentConfig& cfg, const TimeSeries& series) {
    series.validate();
    require(series.length() >= cfg.eval_start + static_cast<std::uint64_t>(cfg.window),
            "dataset: series of length " + std::to_string(series.length()) +
                " is too short for eval_start " + std::to_string(cfg.eval_start));

    Dataset ds;
    ds.raw = series;

    const TimeSeries head = slice_series(series, 0, cfg.eval_start);
    ds.scale = fit_scale(head);
    const TimeSeries head_scaled = scale_to_unit(head, ds.scale);
    const TimeSeries full_scaled = scale_to_unit(series, ds.scale);

    const WindowSet head_windows = filter_windows(make_windows(head_scaled, cfg.window), false);
    require(head_windows.windows.size() >= 2,
            "dataset: fewer than 2 normal training windows before eval_start");
    split_train_val(head_windows, cfg.split_ratio, ds.train, ds.val);

    WindowSet all = make_windows(full_scaled, cfg.window);
    WindowSet eval_pool;
    eval_pool.window_len = all.window_len;
    eval_pool.channels = all.channels;
    for (std::size_t i = 0; i < all.windows.size(); ++i) {
        if (all.source_index[i] < cfg.eval_start) continue;
        eval_pool.windows.push_back(std::move(all.windows[i]));
        eval_pool.labels.push_back(all.labels[i]);
        eval_pool.source_index.push_back(all.source_index[i]);
    }
    const WindowSet normal_pool = filter_windows(eval_pool, false);
    const WindowSet anom_pool = filter_windows(eval_pool, true);
    ds.eval = build_eval_set(normal_pool, anom_pool, cfg.eval_normal, cfg.eval_anomaly,
                             cfg.data_seed);
    return ds;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_kind == "csv") {
        ColumnSpec spec;
        spec.names = cfg.csv_column_names();
        require(!spec.names.empty(), "config: csv datasets require csv_columns");
        spec.expect_label = true;
        TimeSeries s = load_csv(cfg.csv_path, spec, cfg.dt);
        return build_dataset_from_series(cfg, s);
    }
    return build_dataset_from_series(cfg, generate_series(cfg));
}

PhysicsModel physics_from_config(const ExperimentConfig& cfg) {
    if (cfg.physics_kind == "lv") {
        LotkaVolterra m;
        m.alpha = cfg.lv_alpha;
        m.beta = cfg.lv_beta;
        m.delta = cfg.lv_delta;
        m.gamma = cfg.lv_gamma;
        return m;
    }
    if (cfg.physics_kind == "ohm") {
        OhmLaw m;
        m.v_ch = {0};
        m.i_ch = {1};
        m.resistance = {cfg.ohm_resistance};
        return m;
    }
    if (cfg.physics_kind == "emps") {
        EmpsIdm m;
        m.M = cfg.emps_mass;
        m.Fv = cfg.emps_fv;
        m.Fc = cfg.emps_fc;
        m.offset = cfg.emps_offset;
        return m;
    }
    IdealGas m;
    m.R = cfg.gas_r;
    m.rho = cfg.gas_rho;
    return m;
}

WeightSchedule schedule_from_config(const ExperimentConfig& cfg) {
    WeightKind kind = WeightKind::LogSigmoid;
    if (cfg.schedule_kind == "hard-sigmoid") kind = WeightKind::HardSigmoid;
    else if (cfg.schedule_kind == "sigmoid") kind = WeightKind::Sigmoid;
    else if (cfg.schedule_kind == "relu") kind = WeightKind::Relu;
    double m = cfg.sched_m, n = cfg.sched_n, l = cfg.sched_l;
    if (m < 0.0 || n < 0.0 || l < 0.0) default_weight_params(kind, m, n, l);
    return make_weight_schedule(kind, m, n, l, cfg.T);
}

DenoiserModel model_from_config(const ExperimentConfig& cfg, int channels) {
    DenoiserConfig dc;
    dc.channels = channels;
    dc.window_len = cfg.window;
    dc.enc_hidden = cfg.enc_hidden_sizes();
    dc.dec_hidden = cfg.dec_hidden_sizes();
    require(dc.dec_hidden.back() == channels,
            "config: last dec_hidden width must equal the channel count");
    dc.mode = cfg.mode == "x0" ? Parameterization::X0 : Parameterization::Epsilon;
    return init_denoiser(dc, cfg.train_seed);
}

DenoiserModel model_from_checkpoint(const Checkpoint& ckpt, int channels) {
    DenoiserModel model = model_from_config(ckpt.config, channels);
    require(model.params.size() == ckpt.params.size(),
            "checkpoint: parameter count " + std::to_string(ckpt.params.size()) +
                " does not match the config widths (" + std::to_string(model.params.size()) +
                " expected)");
    for (std::size_t i = 0; i < model.params.size(); ++i)
        model.params[i] = static_cast<double>(ckpt.params[i]);
    return model;
}

std::vector<std::string> channel_names_from_config(const ExperimentConfig& cfg) {
    if (cfg.dataset_kind == "lv") return {"prey", "predator"};
    if (cfg.dataset_kind == "emps") return {"tau", "q", "qdot"};
    if (cfg.dataset_kind == "gas") return {"P", "V", "T", "m", "mdot", "Q"};
    return cfg.csv_column_names();
}

DirLock::DirLock(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory '" + out_dir + "': " + ec.message());
    path_ = out_dir + "/.lock";
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw io_error("output directory '" + out_dir +
                           "' is locked by another invocation (stale? remove " + path_ + ")");
        throw io_error("cannot create lock file '" + path_ + "'");
    }
    ::close(fd);
}

DirLock::~DirLock() { ::unlink(path_.c_str()); }

int cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    DirLock lock(out_dir);
    const TimeSeries series = generate_series(cfg);
    const std::string csv_path = out_dir + "/data.csv";
    save_csv(csv_path, series);

    nlohmann::json meta;
    meta["dt"] = cfg.dt;
    meta["units"] = series.units;
    meta["seed"] = cfg.data_seed;
    meta["generator"]["kind"] = cfg.dataset_kind;
    meta["generator"]["n_points"] = cfg.n_points;
    meta["generator"]["anomaly_segments"] = cfg.anomaly_segments;
    meta["generator"]["anomaly_length"] = cfg.anomaly_length;
    meta["generator"]["anomaly_scale"] = cfg.anomaly_scale;
    if (cfg.dataset_kind == "lv") {
        meta["generator"]["alpha"] = cfg.lv_alpha;
        meta["generator"]["beta"] = cfg.lv_beta;
        meta["generator"]["delta"] = cfg.lv_delta;
        meta["generator"]["gamma"] = cfg.lv_gamma;
        meta["generator"]["x0"] = cfg.lv_x0;
        meta["generator"]["y0"] = cfg.lv_y0;
    }
    write_text(out_dir + "/data.meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << series.length() << " points x " << series.channel_count()
              << " channels to " << csv_path << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data_csv,
              const std::string& out_dir) {
    DirLock lock(out_dir);
    // data_csv overrides where the series comes from but is not part of the
    // experiment identity, so the checkpoint config stays comparable across
    // generated-then-loaded and simulated-from-scratch runs
    const ExperimentConfig& used = cfg;

    Dataset ds;
    if (!data_csv.empty()) {
        ColumnSpec spec;
        spec.names = channel_names_from_config(cfg);
        spec.expect_label = true;
        ds = build_dataset_from_series(used, load_csv(data_csv, spec, cfg.dt));
    } else {
        ds = build_dataset(used);
    }

    DenoiserModel model = model_from_config(used, ds.train.channels);
    const NoiseSchedule sched = make_linear_schedule(used.T, used.sigma1, used.sigmaT);
    PhysicsModel physics = physics_from_config(used);
    WeightSchedule weights = schedule_from_config(used);

    TrainOptions opts;
    opts.epochs = used.epochs;
    opts.batch = used.batch;
    opts.lr = used.lr;
    opts.l2 = used.l2;
    opts.seed = used.train_seed;
    opts.windows_per_epoch = used.windows_per_epoch;

    std::ofstream log(out_dir + "/train_log.csv", std::ios::binary | std::ios::trunc);
    if (!log) throw io_error("cannot open '" + out_dir + "/train_log.csv' for writing");
    const TrainResult result =
        train_denoiser(model, ds.train, sched, used.physics_enabled ? &physics : nullptr,
                       used.physics_enabled ? &weights : nullptr, ds.scale, used.dt, opts, &log);

    Checkpoint ckpt;
    ckpt.config = used;
    ckpt.training_steps = result.steps;
    ckpt.seed = used.train_seed;
    ckpt.params.resize(model.params.size());
    for (std::size_t i = 0; i < model.params.size(); ++i)
        ckpt.params[i] = static_cast<float>(model.params[i]);
    save_checkpoint(out_dir + "/checkpoint.bin", ckpt);

    const EpochLog& last = result.log.back();
    std::cout << "trained " << used.epochs << " epochs (" << result.steps
              << " steps); final l_dm=" << last.l_dm << " l_pi=" << last.l_pi
              << "; checkpoint: " << out_dir << "/checkpoint.bin\n";
    return 0;
}

int cmd_detect(const std::string& checkpoint_path, const std::string& data_csv,
               const ExperimentConfig* cfg_override, const std::string& out_dir,
               const std::uint64_t* seed_override) {
    DirLock lock(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    ExperimentConfig cfg = cfg_override ? *cfg_override : ckpt.config;
    if (seed_override) cfg.detect_seed = *seed_override;
    if (!data_csv.empty()) {
        cfg.dataset_kind = ckpt.config.dataset_kind == "csv" ? "csv" : cfg.dataset_kind;
        cfg.csv_path = data_csv;
    }

    Dataset ds;
    if (!data_csv.empty()) {
        ColumnSpec spec;
        spec.names = channel_names_from_config(cfg);
        spec.expect_label = true;
        ds = build_dataset_from_series(cfg, load_csv(data_csv, spec, cfg.dt));
    } else {
        ds = build_dataset(cfg);
    }

    DenoiserModel model = model_from_checkpoint(ckpt, ds.train.channels);
    const NoiseSchedule sched =
        make_linear_schedule(ckpt.config.T, ckpt.config.sigma1, ckpt.config.sigmaT);

    // Validation and evaluation share one scoring-noise stream so the
    // calibrated threshold transfers without Monte-Carlo offset.
    const std::uint64_t score_seed = derive_seed(cfg.detect_seed, 1);
    const std::vector<double> val_scores =
        score_windows(ds.val, model, sched, score_seed, cfg.elbo_stride);
    const double threshold =
        calibrate_threshold(val_scores, ThresholdConfig{cfg.trim, cfg.detect_k});
    const std::vector<double> eval_scores =
        score_windows(ds.eval, model, sched, score_seed, cfg.elbo_stride);
    const ScoreReport report = classify_and_f1(eval_scores, threshold, ds.eval.labels);

    std::ostringstream scores;
    scores << "window_id,score,verdict,truth\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i)
        scores << i << ',' << fmt_g17(report.scores[i]) << ',' << int(report.verdicts[i])
               << ',' << int(report.truth[i]) << '\n';
    write_text(out_dir + "/scores.csv", scores.str());

    nlohmann::json metrics;
    metrics["precision"] = report.precision;
    metrics["recall"] = report.recall;
    metrics["f1"] = report.f1;
    metrics["threshold"] = report.threshold;
    metrics["config"] = cfg.serialize();
    write_text(out_dir + "/metrics.json", metrics.dump(2) + "\n");

    std::cout << "threshold=" << threshold << " precision=" << report.precision
              << " recall=" << report.recall << " f1=" << report.f1 << "\n";
    return 0;
}

int cmd_sample(const std::string& checkpoint_path, int n, std::uint64_t seed,
               const std::string& out_dir) {
    require(n >= 1, "sample: n must be >= 1");
    DirLock lock(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const int channels = channel_count_from_config(ckpt.config);
    DenoiserModel model = model_from_checkpoint(ckpt, channels);
    const NoiseSchedule sched =
        make_linear_schedule(ckpt.config.T, ckpt.config.sigma1, ckpt.config.sigmaT);
    const auto windows = sample(model, sched, n, seed);

    const auto names = channel_names_from_config(ckpt.config);
    std::ostringstream out;
    out << "window,step";
    for (const auto& nm : names) out << ',' << nm;
    out << '\n';
    const int L = ckpt.config.window;
    for (int w = 0; w < n; ++w)
        for (int s = 0; s < L; ++s) {
            out << w << ',' << s;
            for (int c = 0; c < channels; ++c)
                out << ','
                    << fmt_g17(windows[static_cast<std::size_t>(w)]
                                      [static_cast<std::size_t>(s) * channels + c]);
            out << '\n';
        }
    write_text(out_dir + "/samples.csv", out.str());
    std::cout << "wrote " << n << " generated windows to " << out_dir << "/samples.csv\n";
    return 0;
}

int cmd_pca(const std::string& checkpoint_path, const std::string& generated_csv, int n,
            std::uint64_t seed, const std::string& out_dir) {
    DirLock lock(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Dataset ds = build_dataset(ckpt.config);

    std::vector<std::vector<double>> generated;
    if (!generated_csv.empty()) {
        generated = load_samples_csv(generated_csv, ckpt.config.window, ds.train.channels);
    } else {
        require(n >= 2, "pca: need at least 2 generated windows");
        DenoiserModel model = model_from_checkpoint(ckpt, ds.train.channels);
        const NoiseSchedule sched =
            make_linear_schedule(ckpt.config.T, ckpt.config.sigma1, ckpt.config.sigmaT);
        generated = sample(model, sched, n, seed);
    }

    const PcaProjection proj = pca2(ds.val.windows, generated);
    std::ostringstream out;
    out << "set,pc1,pc2\n";
    for (const auto& p : proj.reference)
        out << "reference," << fmt_g17(p[0]) << ',' << fmt_g17(p[1]) << '\n';
    for (const auto& p : proj.generated)
        out << "generated," << fmt_g17(p[0]) << ',' << fmt_g17(p[1]) << '\n';
    write_text(out_dir + "/pca.csv", out.str());
    std::cout << "explained variance ratios: " << proj.explained_variance_ratio[0] << ", "
              << proj.explained_variance_ratio[1] << "; wrote " << out_dir << "/pca.csv\n";
    return 0;
}

int cmd_bench(const std::string& checkpoint_path, int n, const std::string& out_dir) {
    require(n >= 1, "bench: n must be >= 1");
    DirLock lock(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Dataset ds = build_dataset(ckpt.config);
    DenoiserModel model = model_from_checkpoint(ckpt, ds.train.channels);
    const NoiseSchedule sched =
        make_linear_schedule(ckpt.config.T, ckpt.config.sigma1, ckpt.config.sigmaT);

    WindowSet bench;
    bench.window_len = ds.eval.window_len;
    bench.channels = ds.eval.channels;
    for (int i = 0; i < n; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) % ds.eval.windows.size();
        bench.windows.push_back(ds.eval.windows[j]);
        bench.labels.push_back(ds.eval.labels[j]);
        bench.source_index.push_back(ds.eval.source_index[j]);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto scores =
        score_windows(bench, model, sched, ckpt.config.detect_seed, ckpt.config.elbo_stride);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();

    std::ostringstream report;
    report << "windows: " << scores.size() << "\n"
           << "seconds: " << secs << "\n"
           << "ms_per_window: " << (1000.0 * secs / static_cast<double>(scores.size())) << "\n";
    write_text(out_dir + "/bench.txt", report.str());
    std::cout << report.str();
    return 0;
}

}  // namespace tpidm
