#include "tpidm/kmeans.hpp"

#include <cmath>
#include <limits>

#include "tpidm/common.hpp"
#include "tpidm/rng.hpp"

namespace tpidm {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

KMeansModel kmeans_fit(const std::vector<std::vector<double>>& windows, int k,
                       std::uint64_t seed) {
    require(k >= 1, "kmeans_fit: k must be >= 1");
    require(static_cast<int>(windows.size()) >= k,
            "kmeans_fit: fewer samples than clusters");
    const std::size_t n = windows.size();
    const int dim = static_cast<int>(windows[0].size());

    KMeansModel m;
    m.k = k;
    m.dim = dim;
    Rng rng(seed);

    // k-means++ seeding
    m.centroids.push_back(windows[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))]);
    std::vector<double> d2(n);
    while (static_cast<int>(m.centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : m.centroids) best = std::min(best, sq_dist(windows[i], c));
            d2[i] = best;
            total += best;
        }
        double r = rng.uniform(0.0, total);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            r -= d2[i];
            if (r <= 0.0) {
                pick = i;
                break;
            }
        }
        m.centroids.push_back(windows[pick]);
    }

    // Lloyd iterations
    std::vector<int> assign(n, -1);
    double prev_inertia = std::numeric_limits<double>::max();
    for (int iter = 0; iter < 300; ++iter) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int bi = 0;
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(windows[i], m.centroids[c]);
                if (d < best) {
                    best = d;
                    bi = c;
                }
            }
            assign[i] = bi;
            inertia += best;
        }
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) sums[assign[i]][j] += windows[i][j];
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (int j = 0; j < dim; ++j)
                    m.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        m.inertia = inertia;
        m.iterations = iter + 1;
        if (prev_inertia < std::numeric_limits<double>::max()) {
            const double rel = std::abs(prev_inertia - inertia) /
                               std::max(prev_inertia, 1e-300);
            if (rel < 1e-6) break;
        }
        prev_inertia = inertia;
    }
    return m;
}

double kmeans_score(std::span<const double> window, const KMeansModel& model) {
    require(static_cast<int>(window.size()) == model.dim, "kmeans_score: dimension mismatch");
    double best = std::numeric_limits<double>::max();
    for (const auto& c : model.centroids) best = std::min(best, sq_dist(window, c));
    return std::sqrt(best);
}

}  // namespace tpidm
