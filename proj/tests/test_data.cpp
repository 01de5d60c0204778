#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "tpidm/simulate.hpp"
#include "tpidm/timeseries.hpp"

using namespace tpidm;

namespace {

TimeSeries toy_series(std::size_t n) {
    TimeSeries ts;
    ts.names = {"a", "b"};
    ts.units = {"1", "1"};
    ts.dt = 0.5;
    ts.channels.resize(2);
    for (std::size_t i = 0; i < n; ++i) {
        ts.channels[0].push_back(static_cast<double>(i));
        ts.channels[1].push_back(std::sin(0.1 * static_cast<double>(i)));
    }
    ts.labels.assign(n, 0);
    return ts;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/tpidm_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("scaling maps [0,10] onto [-1,1] with midpoint 0") {
    TimeSeries ts;
    ts.names = {"a"};
    ts.units = {"1"};
    ts.dt = 1.0;
    ts.channels = {{0.0, 5.0, 10.0}};
    ts.labels = {0, 0, 0};
    const auto sp = fit_scale(ts);
    const auto scaled = scale_to_unit(ts, sp);
    CHECK(scaled.channels[0][0] == doctest::Approx(-1.0));
    CHECK(scaled.channels[0][1] == doctest::Approx(0.0));
    CHECK(scaled.channels[0][2] == doctest::Approx(1.0));
    const auto back = unscale(scaled, sp);
    for (int i = 0; i < 3; ++i)
        CHECK(back.channels[0][i] == doctest::Approx(ts.channels[0][i]).epsilon(1e-12));
}

TEST_CASE("scale/unscale round-trips to 1e-12 relative on LV data") {
    const auto ts = simulate_lv(LvParams{}, 10.0, 2.0, 2000, 0.01);
    const auto sp = fit_scale(ts);
    const auto back = unscale(scale_to_unit(ts, sp), sp);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < ts.length(); i += 37) {
            const double rel = std::abs(back.channels[c][i] - ts.channels[c][i]) /
                               std::max(1.0, std::abs(ts.channels[c][i]));
            CHECK(rel < 1e-12);
        }
}

TEST_CASE("constant channel is rejected by name") {
    TimeSeries ts;
    ts.names = {"flat"};
    ts.units = {"1"};
    ts.dt = 1.0;
    ts.channels = {{2.0, 2.0, 2.0}};
    ts.labels = {0, 0, 0};
    try {
        fit_scale(ts);
        FAIL("expected contract_error");
    } catch (const contract_error& e) {
        CHECK(std::string(e.what()).find("flat") != std::string::npos);
    }
}

TEST_CASE("stride-1 windowing: count, layout, any-point labels") {
    auto ts = toy_series(5);
    ts.labels[3] = 1;
    const auto ws = make_windows(ts, 3);
    CHECK(ws.windows.size() == 3);  // N - L + 1
    CHECK(ws.channels == 2);
    // window 0 covers points 0..2 (normal); windows 1 and 2 cover point 3
    CHECK(ws.labels[0] == 0);
    CHECK(ws.labels[1] == 1);
    CHECK(ws.labels[2] == 1);
    // time-major layout [L x C]
    CHECK(ws.windows[1][0] == doctest::Approx(1.0));  // point 1, channel a
    CHECK(ws.windows[1][2] == doctest::Approx(2.0));  // point 2, channel a
    CHECK(ws.source_index[1] == 1);

    for (int L = 1; L <= 5; ++L)
        CHECK(make_windows(toy_series(5), L).windows.size() == static_cast<std::size_t>(6 - L));
    CHECK_THROWS_AS(make_windows(toy_series(4), 5), contract_error);
}

TEST_CASE("contiguous train/val split at the given ratio") {
    const auto ws = make_windows(toy_series(109), 10);  // 100 windows
    WindowSet train, val;
    split_train_val(ws, 0.9, train, val);
    CHECK(train.windows.size() == 90);
    CHECK(val.windows.size() == 10);
    CHECK(train.source_index.front() == 0);
    CHECK(val.source_index.front() == 90);
}

TEST_CASE("eval set composition is exact and seeded sampling is stable") {
    auto ts = toy_series(500);
    for (std::size_t i = 300; i < 340; ++i) ts.labels[i] = 1;
    const auto all = make_windows(ts, 10);
    WindowSet normal, anom;
    normal.window_len = anom.window_len = 10;
    normal.channels = anom.channels = 2;
    for (std::size_t i = 0; i < all.windows.size(); ++i) {
        auto& dst = all.labels[i] ? anom : normal;
        dst.windows.push_back(all.windows[i]);
        dst.labels.push_back(all.labels[i]);
        dst.source_index.push_back(all.source_index[i]);
    }
    const auto ev = build_eval_set(normal, anom, 30, 20, 99);
    CHECK(ev.windows.size() == 50);
    std::size_t n_anom = 0;
    for (auto l : ev.labels) n_anom += l;
    CHECK(n_anom == 20);
    const auto ev2 = build_eval_set(normal, anom, 30, 20, 99);
    CHECK(ev.windows == ev2.windows);
    const auto ev3 = build_eval_set(normal, anom, 30, 20, 100);
    CHECK(ev.source_index != ev3.source_index);

    // insufficient pool errors carry the counts
    try {
        build_eval_set(normal, anom, 30, 1000, 1);
        FAIL("expected contract_error");
    } catch (const contract_error& e) {
        CHECK(std::string(e.what()).find("1000") != std::string::npos);
    }
}

TEST_CASE("CSV round-trip preserves values to 1e-12") {
    TempFile f("roundtrip.csv");
    auto ts = toy_series(50);
    ts.labels[7] = 1;
    save_csv(f.path, ts);
    ColumnSpec spec;
    spec.names = {"a", "b"};
    spec.expect_label = true;
    const auto back = load_csv(f.path, spec, ts.dt);
    REQUIRE(back.length() == 50);
    CHECK(back.labels[7] == 1);
    CHECK(back.labels[8] == 0);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 50; ++i)
            CHECK(back.channels[c][i] == doctest::Approx(ts.channels[c][i]).epsilon(1e-12));
}

TEST_CASE("CSV loader reports schema and parse problems") {
    TempFile f("bad.csv");
    {
        std::ofstream out(f.path);
        out << "a,b\n1.0,2.0\n3.0,4.0\n";
    }
    ColumnSpec spec;
    spec.names = {"a", "missing"};
    CHECK_THROWS_AS(load_csv(f.path, spec, 1.0), io_error);

    spec.names = {"a", "b"};
    const auto ok = load_csv(f.path, spec, 1.0);
    CHECK(ok.length() == 2);
    for (auto l : ok.labels) CHECK(l == 0);  // absent label column -> all normal

    {
        std::ofstream out(f.path);
        out << "a,b\n1.0,2.0\n3.0\n";
    }
    CHECK_THROWS_AS(load_csv(f.path, spec, 1.0), io_error);

    {
        std::ofstream out(f.path);
        out << "a,b\n1.0,oops\n";
    }
    CHECK_THROWS_AS(load_csv(f.path, spec, 1.0), io_error);

    CHECK_THROWS_AS(load_csv("/nonexistent/nowhere.csv", spec, 1.0), io_error);
}

TEST_CASE("series validation catches ragged channels") {
    TimeSeries ts;
    ts.names = {"a", "b"};
    ts.units = {"1", "1"};
    ts.dt = 1.0;
    ts.channels = {{1.0, 2.0}, {1.0}};
    ts.labels = {0, 0};
    CHECK_THROWS_AS(ts.validate(), contract_error);
}
