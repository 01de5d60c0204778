#include "tpidm/simulate.hpp"

#include <cmath>
#include <iostream>

namespace tpidm {

namespace {

struct LvState {
    double x, y;
};

LvState lv_rhs(const LvParams& p, LvState s) {
    return {p.alpha * s.x - p.beta * s.x * s.y, p.delta * s.x * s.y - p.gamma * s.y};
}

LvState rk4_step(const LvParams& p, LvState s, double dt) {
    const LvState k1 = lv_rhs(p, s);
    const LvState k2 = lv_rhs(p, {s.x + 0.5 * dt * k1.x, s.y + 0.5 * dt * k1.y});
    const LvState k3 = lv_rhs(p, {s.x + 0.5 * dt * k2.x, s.y + 0.5 * dt * k2.y});
    const LvState k4 = lv_rhs(p, {s.x + dt * k3.x, s.y + dt * k3.y});
    return {s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)};
}

void check_positive_params(const LvParams& p) {
    require(p.alpha > 0 && p.beta > 0 && p.delta > 0 && p.gamma > 0,
            "simulate_lv: parameters must be positive");
}

}  // namespace

double lv_first_integral(const LvParams& p, double x, double y) {
    return p.delta * x - p.gamma * std::log(x) + p.beta * y - p.alpha * std::log(y);
}

TimeSeries simulate_lv(const LvParams& p, double x0, double y0, std::size_t n, double dt) {
    return simulate_lv_with_anomalies(p, x0, y0, n, dt, {});
}

TimeSeries simulate_lv_with_anomalies(const LvParams& p, double x0, double y0, std::size_t n,
                                      double dt, const std::vector<AnomalySegment>& segments) {
    check_positive_params(p);
    require(n >= 2, "simulate_lv: need at least 2 samples");
    require(dt > 0.0, "simulate_lv: dt must be positive");

    // Segment table: -1 = normal, else segment index. Overlaps rejected.
    std::vector<int> seg_of(n, -1);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& seg = segments[k];
        require(seg.length > 0 && seg.start + seg.length <= n,
                "simulate_lv: anomaly segment out of range");
        if (seg.scale == 1.0)
            std::cerr << "warning: anomaly segment with scale factor 1.0 "
                         "produces data identical to normal simulation\n";
        for (std::size_t i = seg.start; i < seg.start + seg.length; ++i) {
            require(seg_of[i] < 0, "simulate_lv: overlapping anomaly segments");
            seg_of[i] = static_cast<int>(k);
        }
    }

    TimeSeries ts;
    ts.dt = dt;
    ts.names = {"prey", "predator"};
    ts.units = {"population", "population"};
    ts.channels.assign(2, std::vector<double>(n));
    ts.labels.assign(n, 0);

    LvState s{x0, y0};
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x) || !std::isfinite(s.y))
            throw numeric_error("simulate_lv: non-finite state at step " + std::to_string(i));
        ts.channels[0][i] = s.x;
        ts.channels[1][i] = s.y;
        if (seg_of[i] >= 0) ts.labels[i] = 1;
        if (i + 1 < n) {
            // The step leading into point i+1 uses the parameters active there,
            // so segment boundaries splice the state continuously.
            LvParams eff = p;
            if (seg_of[i + 1] >= 0) {
                const double sc = segments[seg_of[i + 1]].scale;
                eff.alpha *= sc;
                eff.beta *= sc;
                eff.delta *= sc;
                eff.gamma *= sc;
            }
            s = rk4_step(eff, s, dt);
        }
    }
    return ts;
}

TimeSeries simulate_emps(double M, double Fv, double Fc, double offset,
                         const EmpsProfile& profile, std::size_t n, double dt) {
    require(M > 0.0, "simulate_emps: mass must be positive");
    require(n >= 2 && dt > 0.0, "simulate_emps: bad sampling");

    TimeSeries ts;
    ts.dt = dt;
    ts.names = {"tau", "q", "qdot"};
    ts.units = {"N", "m", "m/s"};
    ts.channels.assign(3, std::vector<double>(n));
    ts.labels.assign(n, 0);

    const double kappa = 1e-3;  // smoothed sign keeps the dynamics integrable
    double q = 0.0, qd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double tau = offset + profile.drive_amp * std::sin(2.0 * M_PI * profile.drive_freq * t);
        ts.channels[0][i] = tau;
        ts.channels[1][i] = q;
        ts.channels[2][i] = qd;
        if (i + 1 < n) {
            auto acc = [&](double tt, double qdv) {
                const double tv =
                    offset + profile.drive_amp * std::sin(2.0 * M_PI * profile.drive_freq * tt);
                return (tv - Fv * qdv - Fc * std::tanh(qdv / kappa) - offset) / M;
            };
            // RK4 on (q, qd)
            const double k1q = qd, k1v = acc(t, qd);
            const double k2q = qd + 0.5 * dt * k1v, k2v = acc(t + 0.5 * dt, qd + 0.5 * dt * k1v);
            const double k3q = qd + 0.5 * dt * k2v, k3v = acc(t + 0.5 * dt, qd + 0.5 * dt * k2v);
            const double k4q = qd + dt * k3v, k4v = acc(t + dt, qd + dt * k3v);
            q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            qd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (!std::isfinite(q) || !std::isfinite(qd))
                throw numeric_error("simulate_emps: non-finite state at step " +
                                    std::to_string(i + 1));
        }
    }
    return ts;
}

TimeSeries simulate_gas(double R, double rho, const GasProfile& profile,
                        std::size_t n, double dt) {
    require(rho > 0.0, "simulate_gas: density must be positive");
    require(R > 0.0, "simulate_gas: gas constant must be positive");
    require(n >= 2 && dt > 0.0, "simulate_gas: bad sampling");

    TimeSeries ts;
    ts.dt = dt;
    ts.names = {"P", "V", "T", "m", "mdot", "Q"};
    ts.units = {"Pa", "m3", "K", "kg", "kg/s", "m3/s"};
    ts.channels.assign(6, std::vector<double>(n));
    ts.labels.assign(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double P = profile.P0 + profile.P_amp * std::cos(2.0 * M_PI * profile.P_freq * t);
        const double V = profile.V0 + profile.V_amp * std::sin(2.0 * M_PI * profile.V_freq * t);
        const double m = profile.m0 + profile.m_amp * std::sin(2.0 * M_PI * profile.m_freq * t);
        const double mdot = profile.m_amp * 2.0 * M_PI * profile.m_freq *
                            std::cos(2.0 * M_PI * profile.m_freq * t);
        ts.channels[0][i] = P;
        ts.channels[1][i] = V;
        ts.channels[2][i] = P * (V / m) / R;  // ideal gas law holds exactly
        ts.channels[3][i] = m;
        ts.channels[4][i] = mdot;
        ts.channels[5][i] = mdot / rho;
    }
    return ts;
}

TimeSeries inject_amplitude_anomaly(const TimeSeries& series,
                                    const std::vector<AnomalySegment>& segments, double scale) {
    series.validate();
    TimeSeries out = series;
    std::vector<std::uint8_t> seen(series.length(), 0);
    for (const auto& seg : segments) {
        require(seg.length > 0 && seg.start + seg.length <= series.length(),
                "inject_amplitude_anomaly: segment out of range");
        for (std::size_t i = seg.start; i < seg.start + seg.length; ++i) {
            require(!seen[i], "inject_amplitude_anomaly: overlapping segments");
            seen[i] = 1;
            for (auto& ch : out.channels) ch[i] *= scale;
            out.labels[i] = 1;
        }
    }
    return out;
}

}  // namespace tpidm
