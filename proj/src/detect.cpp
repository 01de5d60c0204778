#include "tpidm/detect.hpp"

#include <algorithm>
#include <cmath>

#include "tpidm/rng.hpp"

namespace tpidm {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    require(!sorted.empty(), "quantile: empty input");
    require(q >= 0.0 && q <= 1.0, "quantile: q out of range");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double calibrate_threshold(std::vector<double> scores, const ThresholdConfig& cfg) {
    require(scores.size() >= 10, "calibrate_threshold: need at least 10 validation scores");
    require(cfg.trim >= 0.0 && cfg.trim < 0.5, "calibrate_threshold: trim out of range");
    require(cfg.k >= 0.0, "calibrate_threshold: k must be non-negative");
    std::sort(scores.begin(), scores.end());
    const std::size_t drop = static_cast<std::size_t>(cfg.trim * static_cast<double>(scores.size()));
    double sum = 0.0;
    for (std::size_t i = drop; i < scores.size() - drop; ++i) sum += scores[i];
    const double mu_trim = sum / static_cast<double>(scores.size() - 2 * drop);
    const double iqr = quantile_sorted(scores, 0.75) - quantile_sorted(scores, 0.25);
    return mu_trim + cfg.k * iqr;
}

ScoreReport classify_and_f1(const std::vector<double>& scores, double threshold,
                            const std::vector<std::uint8_t>& truth) {
    require(scores.size() == truth.size(), "classify_and_f1: length mismatch");
    ScoreReport r;
    r.scores = scores;
    r.truth = truth;
    r.threshold = threshold;
    r.verdicts.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        r.verdicts[i] = pred;
        if (pred && truth[i]) ++r.tp;
        else if (pred && !truth[i]) ++r.fp;
        else if (!pred && truth[i]) ++r.fn;
        else ++r.tn;
    }
    if (r.tp + r.fp == 0 || r.tp + r.fn == 0) r.zero_division = true;
    r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
    r.recall = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    r.f1 = (r.precision + r.recall > 0.0)
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    if (r.f1 == 0.0) r.zero_division = r.zero_division || (r.tp == 0);
    return r;
}

std::vector<double> score_windows(const WindowSet& windows, const DenoiserModel& model,
                                  const NoiseSchedule& sched, std::uint64_t seed,
                                  int elbo_stride) {
    // Common random numbers: every window is scored with the same noise
    // realization, so the Monte-Carlo error in the ELBO estimate is shared
    // across windows (and, when the caller reuses the seed, between the
    // calibration and evaluation sets) instead of inflating score spread.
    std::vector<double> scores(windows.windows.size());
    for (std::size_t i = 0; i < windows.windows.size(); ++i)
        scores[i] = elbo(windows.windows[i], model, sched, seed, elbo_stride);
    return scores;
}

// ---- Wilcoxon --------------------------------------------------------------

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "wilcoxon: length mismatch");
    require(a.size() >= 5 && a.size() <= 50, "wilcoxon: need between 5 and 50 pairs");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);  // zero-discard rule
    }
    if (diffs.empty())
        throw numeric_error("wilcoxon: all differences are zero; result undefined");
    const std::size_t n = diffs.size();

    // Mid-ranks of |d|; doubled to stay integral under ties.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(diffs[i]) < std::abs(diffs[j]);
    });
    std::vector<long> rank2(n);  // 2 * rank
    std::vector<long> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const long r2 = static_cast<long>(i + 1 + j);  // 2 * average rank
        for (std::size_t k2 = i; k2 < j; ++k2) rank2[order[k2]] = r2;
        tie_sizes.push_back(static_cast<long>(j - i));
        i = j;
    }

    long wplus2 = 0, wminus2 = 0;
    for (std::size_t i = 0; i < n; ++i)
        (diffs[i] > 0.0 ? wplus2 : wminus2) += rank2[i];

    WilcoxonResult res;
    res.w_plus = wplus2 / 2.0;
    res.w_minus = wminus2 / 2.0;
    res.statistic = std::min(res.w_plus, res.w_minus);
    res.n_used = n;

    if (n <= 25) {
        // Exact null distribution of the doubled rank sum by subset-sum DP.
        res.exact = true;
        const long total2 = wplus2 + wminus2;
        std::vector<double> dist(total2 + 1, 0.0);
        dist[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const long r2 = rank2[i];
            for (long s = total2; s >= r2; --s) dist[s] += dist[s - r2];
        }
        const double denom = std::pow(2.0, static_cast<double>(n));
        const long obs2 = static_cast<long>(2.0 * res.statistic + 0.5);
        double lower = 0.0;
        for (long s = 0; s <= obs2; ++s) lower += dist[s];
        res.p_value = std::min(1.0, 2.0 * lower / denom);
    } else {
        // Normal approximation with tie correction.
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        for (long t : tie_sizes)
            tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = (res.statistic - mean) / std::sqrt(var);
        res.p_value = std::min(1.0, 2.0 * 0.5 * std::erfc(-z / std::sqrt(2.0)));
        res.p_value = std::min(1.0, res.p_value);
    }
    return res;
}

}  // namespace tpidm
