#ifndef TPIDM_KMEANS_HPP
#define TPIDM_KMEANS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace tpidm {

struct KMeansModel {
    int k = 0;
    int dim = 0;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations until the relative inertia
// change drops below 1e-6 or 300 iterations.
KMeansModel kmeans_fit(const std::vector<std::vector<double>>& windows, int k,
                       std::uint64_t seed);

// Euclidean distance to the nearest centroid.
double kmeans_score(std::span<const double> window, const KMeansModel& model);

}  // namespace tpidm

#endif
