#include "tpidm/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tpidm {

namespace {

std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return d;
    } catch (const std::exception&) {
        throw contract_error("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw contract_error("config: key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw contract_error("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> s = [] {
        std::map<std::string, Setter> m;
        auto str = [&](const std::string& key, std::string ExperimentConfig::* f) {
            m[key] = [f](ExperimentConfig& c, const std::string&, const std::string& v) {
                c.*f = v;
            };
        };
        auto num = [&](const std::string& key, double ExperimentConfig::* f) {
            m[key] = [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*f = parse_double(k, v);
            };
        };
        auto iv = [&](const std::string& key, int ExperimentConfig::* f) {
            m[key] = [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*f = static_cast<int>(parse_int(k, v));
            };
        };
        auto uv = [&](const std::string& key, std::uint64_t ExperimentConfig::* f) {
            m[key] = [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
                const std::int64_t x = parse_int(k, v);
                if (x < 0) throw contract_error("config: key '" + k + "' must be >= 0");
                c.*f = static_cast<std::uint64_t>(x);
            };
        };
        auto bv = [&](const std::string& key, bool ExperimentConfig::* f) {
            m[key] = [f](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.*f = parse_bool(k, v);
            };
        };

        str("dataset_kind", &ExperimentConfig::dataset_kind);
        str("csv_path", &ExperimentConfig::csv_path);
        str("csv_columns", &ExperimentConfig::csv_columns);
        num("dt", &ExperimentConfig::dt);
        uv("n_points", &ExperimentConfig::n_points);
        iv("window", &ExperimentConfig::window);
        num("split_ratio", &ExperimentConfig::split_ratio);
        uv("data_seed", &ExperimentConfig::data_seed);
        uv("eval_normal", &ExperimentConfig::eval_normal);
        uv("eval_anomaly", &ExperimentConfig::eval_anomaly);
        uv("eval_start", &ExperimentConfig::eval_start);
        iv("anomaly_segments", &ExperimentConfig::anomaly_segments);
        uv("anomaly_length", &ExperimentConfig::anomaly_length);
        num("anomaly_scale", &ExperimentConfig::anomaly_scale);
        num("lv_alpha", &ExperimentConfig::lv_alpha);
        num("lv_beta", &ExperimentConfig::lv_beta);
        num("lv_delta", &ExperimentConfig::lv_delta);
        num("lv_gamma", &ExperimentConfig::lv_gamma);
        num("lv_x0", &ExperimentConfig::lv_x0);
        num("lv_y0", &ExperimentConfig::lv_y0);
        num("emps_mass", &ExperimentConfig::emps_mass);
        num("emps_fv", &ExperimentConfig::emps_fv);
        num("emps_fc", &ExperimentConfig::emps_fc);
        num("emps_offset", &ExperimentConfig::emps_offset);
        num("gas_r", &ExperimentConfig::gas_r);
        num("gas_rho", &ExperimentConfig::gas_rho);
        str("mode", &ExperimentConfig::mode);
        iv("T", &ExperimentConfig::T);
        num("sigma1", &ExperimentConfig::sigma1);
        num("sigmaT", &ExperimentConfig::sigmaT);
        str("enc_hidden", &ExperimentConfig::enc_hidden);
        str("dec_hidden", &ExperimentConfig::dec_hidden);
        iv("epochs", &ExperimentConfig::epochs);
        iv("batch", &ExperimentConfig::batch);
        num("lr", &ExperimentConfig::lr);
        num("l2", &ExperimentConfig::l2);
        uv("train_seed", &ExperimentConfig::train_seed);
        uv("windows_per_epoch", &ExperimentConfig::windows_per_epoch);
        bv("physics_enabled", &ExperimentConfig::physics_enabled);
        str("physics_kind", &ExperimentConfig::physics_kind);
        str("schedule_kind", &ExperimentConfig::schedule_kind);
        num("sched_m", &ExperimentConfig::sched_m);
        num("sched_n", &ExperimentConfig::sched_n);
        num("sched_l", &ExperimentConfig::sched_l);
        num("ohm_resistance", &ExperimentConfig::ohm_resistance);
        num("trim", &ExperimentConfig::trim);
        num("detect_k", &ExperimentConfig::detect_k);
        iv("elbo_stride", &ExperimentConfig::elbo_stride);
        uv("detect_seed", &ExperimentConfig::detect_seed);
        return m;
    }();
    return s;
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
    for (const char* o : opts)
        if (v == o) return true;
    return false;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(one_of(dataset_kind, {"lv", "emps", "gas", "csv"}),
            "config: dataset_kind must be one of lv|emps|gas|csv, got '" + dataset_kind + "'");
    require(dataset_kind != "csv" || !csv_path.empty(),
            "config: csv datasets require csv_path");
    require(dt > 0.0, "config: dt must be positive");
    require(window >= 2, "config: window must be >= 2");
    require(n_points > static_cast<std::uint64_t>(window), "config: n_points must exceed window");
    require(split_ratio > 0.0 && split_ratio < 1.0, "config: split_ratio must be in (0, 1)");
    require(eval_start > static_cast<std::uint64_t>(window) && eval_start < n_points,
            "config: eval_start must lie strictly inside the series");
    require(anomaly_segments >= 0, "config: anomaly_segments must be >= 0");
    require(anomaly_length >= 1, "config: anomaly_length must be >= 1");
    require(one_of(mode, {"epsilon", "x0"}), "config: mode must be epsilon or x0");
    require(T >= 2, "config: T must be >= 2");
    require(sigma1 > 0.0 && sigma1 < sigmaT && sigmaT < 1.0,
            "config: need 0 < sigma1 < sigmaT < 1");
    require(epochs >= 1, "config: epochs must be >= 1");
    require(batch >= 1, "config: batch must be >= 1");
    require(lr > 0.0, "config: lr must be positive");
    require(l2 >= 0.0, "config: l2 must be >= 0");
    require(one_of(physics_kind, {"lv", "ohm", "emps", "gas"}),
            "config: physics_kind must be one of lv|ohm|emps|gas");
    require(one_of(schedule_kind, {"log-sigmoid", "hard-sigmoid", "sigmoid", "relu"}),
            "config: schedule_kind must be one of log-sigmoid|hard-sigmoid|sigmoid|relu");
    require(trim >= 0.0 && trim < 0.5, "config: trim must be in [0, 0.5)");
    require(detect_k >= 0.0, "config: detect_k must be >= 0");
    require(elbo_stride >= 1, "config: elbo_stride must be >= 1");

    const auto enc = enc_hidden_sizes();
    const auto dec = dec_hidden_sizes();
    require(!enc.empty() && !dec.empty(), "config: enc_hidden and dec_hidden must be non-empty");
    for (int h : enc) require(h >= 1, "config: enc_hidden sizes must be >= 1");
    for (int h : dec) require(h >= 1, "config: dec_hidden sizes must be >= 1");
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    out << "dataset_kind = " << dataset_kind << "\n";
    out << "csv_path = " << csv_path << "\n";
    out << "csv_columns = " << csv_columns << "\n";
    out << "dt = " << fmt_double(dt) << "\n";
    out << "n_points = " << n_points << "\n";
    out << "window = " << window << "\n";
    out << "split_ratio = " << fmt_double(split_ratio) << "\n";
    out << "data_seed = " << data_seed << "\n";
    out << "eval_normal = " << eval_normal << "\n";
    out << "eval_anomaly = " << eval_anomaly << "\n";
    out << "eval_start = " << eval_start << "\n";
    out << "anomaly_segments = " << anomaly_segments << "\n";
    out << "anomaly_length = " << anomaly_length << "\n";
    out << "anomaly_scale = " << fmt_double(anomaly_scale) << "\n";
    out << "lv_alpha = " << fmt_double(lv_alpha) << "\n";
    out << "lv_beta = " << fmt_double(lv_beta) << "\n";
    out << "lv_delta = " << fmt_double(lv_delta) << "\n";
    out << "lv_gamma = " << fmt_double(lv_gamma) << "\n";
    out << "lv_x0 = " << fmt_double(lv_x0) << "\n";
    out << "lv_y0 = " << fmt_double(lv_y0) << "\n";
    out << "emps_mass = " << fmt_double(emps_mass) << "\n";
    out << "emps_fv = " << fmt_double(emps_fv) << "\n";
    out << "emps_fc = " << fmt_double(emps_fc) << "\n";
    out << "emps_offset = " << fmt_double(emps_offset) << "\n";
    out << "gas_r = " << fmt_double(gas_r) << "\n";
    out << "gas_rho = " << fmt_double(gas_rho) << "\n";
    out << "mode = " << mode << "\n";
    out << "T = " << T << "\n";
    out << "sigma1 = " << fmt_double(sigma1) << "\n";
    out << "sigmaT = " << fmt_double(sigmaT) << "\n";
    out << "enc_hidden = " << enc_hidden << "\n";
    out << "dec_hidden = " << dec_hidden << "\n";
    out << "epochs = " << epochs << "\n";
    out << "batch = " << batch << "\n";
    out << "lr = " << fmt_double(lr) << "\n";
    out << "l2 = " << fmt_double(l2) << "\n";
    out << "train_seed = " << train_seed << "\n";
    out << "windows_per_epoch = " << windows_per_epoch << "\n";
    out << "physics_enabled = " << (physics_enabled ? "true" : "false") << "\n";
    out << "physics_kind = " << physics_kind << "\n";
    out << "schedule_kind = " << schedule_kind << "\n";
    out << "sched_m = " << fmt_double(sched_m) << "\n";
    out << "sched_n = " << fmt_double(sched_n) << "\n";
    out << "sched_l = " << fmt_double(sched_l) << "\n";
    out << "ohm_resistance = " << fmt_double(ohm_resistance) << "\n";
    out << "trim = " << fmt_double(trim) << "\n";
    out << "detect_k = " << fmt_double(detect_k) << "\n";
    out << "elbo_stride = " << elbo_stride << "\n";
    out << "detect_seed = " << detect_seed << "\n";
    return out.str();
}

std::vector<int> ExperimentConfig::enc_hidden_sizes() const { return parse_int_list(enc_hidden); }
std::vector<int> ExperimentConfig::dec_hidden_sizes() const { return parse_int_list(dec_hidden); }

std::vector<std::string> ExperimentConfig::csv_column_names() const {
    std::vector<std::string> out;
    std::stringstream ss(csv_columns);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim_ws(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim_ws(tok);
        require(!tok.empty(), "hidden-size list: empty element in '" + csv + "'");
        out.push_back(static_cast<int>(parse_int("hidden-size list", tok)));
    }
    require(!out.empty(), "hidden-size list: no sizes given");
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim_ws(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw contract_error("config: line " + std::to_string(lineno) +
                                 " is not of the form key = value");
        const std::string key = trim_ws(stripped.substr(0, eq));
        const std::string value = trim_ws(stripped.substr(eq + 1));
        auto it = schema().find(key);
        if (it == schema().end())
            throw contract_error("config: unknown key '" + key + "' on line " +
                                 std::to_string(lineno));
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace tpidm
