#ifndef TPIDM_DETECT_HPP
#define TPIDM_DETECT_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "tpidm/diffusion.hpp"
#include "tpidm/timeseries.hpp"

namespace tpidm {

struct ThresholdConfig {
    double trim = 0.1;  // proportion dropped from each tail
    double k = 1.5;     // IQR multiplier
};

// Sorts, drops floor(trim*n) from each tail, and returns
// trimmed mean + k * (Q3 - Q1) with linear-interpolation quantiles over the
// full score set.
double calibrate_threshold(std::vector<double> validation_scores, const ThresholdConfig& cfg);

// Linear-interpolation quantile of a sorted vector (position (n-1)*q).
double quantile_sorted(const std::vector<double>& sorted, double q);

struct ScoreReport {
    std::vector<double> scores;
    std::vector<std::uint8_t> verdicts;  // score > threshold
    std::vector<std::uint8_t> truth;
    double threshold = 0.0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    bool zero_division = false;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

ScoreReport classify_and_f1(const std::vector<double>& scores, double threshold,
                            const std::vector<std::uint8_t>& truth);

// Deterministic negative-ELBO score per window; per-window seeds derived
// from (seed, window index).
std::vector<double> score_windows(const WindowSet& windows, const DenoiserModel& model,
                                  const NoiseSchedule& sched, std::uint64_t seed,
                                  int elbo_stride = 1);

// ---- Wilcoxon signed-rank test --------------------------------------------

struct WilcoxonResult {
    double w_minus = 0.0;  // negative-rank sum
    double w_plus = 0.0;
    double statistic = 0.0;  // min(w_plus, w_minus)
    double p_value = 1.0;
    std::size_t n_used = 0;  // pairs after zero-discard
    bool exact = false;
};

// Paired two-sided test; zeros discarded, ties mid-ranked. Exact enumeration
// for n <= 25, normal approximation with tie correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

// ---- PCA -------------------------------------------------------------------

struct PcaProjection {
    std::vector<std::array<double, 2>> reference;  // projected reference windows
    std::vector<std::array<double, 2>> generated;
    std::array<double, 2> explained_variance_ratio{0.0, 0.0};
};

// PCA fitted on the reference set (covariance eigendecomposition); both sets
// projected onto the top two components.
PcaProjection pca2(const std::vector<std::vector<double>>& reference,
                   const std::vector<std::vector<double>>& generated);

}  // namespace tpidm

#endif
