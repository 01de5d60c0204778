#ifndef TPIDM_SIMULATE_HPP
#define TPIDM_SIMULATE_HPP

#include <cstddef>
#include <vector>

#include "tpidm/timeseries.hpp"

namespace tpidm {

struct LvParams {
    double alpha = 1.1, beta = 0.4, delta = 0.4, gamma = 0.1;
};

struct AnomalySegment {
    std::size_t start = 0;
    std::size_t length = 0;
    double scale = 1.5;
};

// Classic RK4 integration of dx/dt = ax - bxy, dy/dt = dxy - gy.
TimeSeries simulate_lv(const LvParams& p, double x0, double y0, std::size_t n, double dt);

// Re-simulates the designated segments with all four parameters scaled,
// splicing state continuously; covered points are labeled anomalous.
TimeSeries simulate_lv_with_anomalies(const LvParams& p, double x0, double y0, std::size_t n,
                                      double dt, const std::vector<AnomalySegment>& segments);

// First integral delta*x - gamma*ln(x) + beta*y - alpha*ln(y), conserved
// along exact trajectories; integrator-accuracy oracle.
double lv_first_integral(const LvParams& p, double x, double y);

struct EmpsProfile {
    double drive_amp = 60.0;   // sinusoidal torque amplitude
    double drive_freq = 0.5;   // Hz
};

// Integrates M qdd = tau - Fv qd - Fc sign(qd) - offset under a sinusoidal
// drive (sign smoothed for integration); emits channels (tau, q, qdot).
TimeSeries simulate_emps(double M, double Fv, double Fc, double offset,
                         const EmpsProfile& profile, std::size_t n, double dt);

struct GasProfile {
    double P0 = 2.0e5, P_amp = 2.0e4, P_freq = 0.2;
    double V0 = 1.0, V_amp = 0.2, V_freq = 0.13;
    double m0 = 2.0, m_amp = 0.3, m_freq = 0.07;
};

// Emits (P, V, T, m, mdot, Q) with T = P*(V/m)/R and mdot = rho*Q by
// construction, so both rate-law residuals vanish up to finite differences.
TimeSeries simulate_gas(double R, double rho, const GasProfile& profile,
                        std::size_t n, double dt);

// Scales every channel by `scale` inside the segments and labels the points;
// the synthetic-anomaly scheme for the EMPS/gas stand-ins.
TimeSeries inject_amplitude_anomaly(const TimeSeries& series,
                                    const std::vector<AnomalySegment>& segments, double scale);

}  // namespace tpidm

#endif
