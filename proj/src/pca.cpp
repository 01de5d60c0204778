#include <algorithm>
#include <cmath>
#include <utility>

#include "tpidm/detect.hpp"

namespace tpidm {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major, n x n).
// Eigenvalues land on the diagonal; V accumulates eigenvectors in columns.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, int n) {
    v.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-22) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
}

}  // namespace

PcaProjection pca2(const std::vector<std::vector<double>>& reference,
                   const std::vector<std::vector<double>>& generated) {
    require(reference.size() >= 2, "pca2: need at least 2 reference windows");
    require(generated.size() >= 2, "pca2: need at least 2 generated windows");
    const int d = static_cast<int>(reference[0].size());
    for (const auto& w : reference)
        require(static_cast<int>(w.size()) == d, "pca2: reference dimension mismatch");
    for (const auto& w : generated)
        require(static_cast<int>(w.size()) == d, "pca2: generated dimension mismatch");

    std::vector<double> mean(d, 0.0);
    for (const auto& w : reference)
        for (int j = 0; j < d; ++j) mean[j] += w[j];
    for (int j = 0; j < d; ++j) mean[j] /= static_cast<double>(reference.size());

    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& w : reference) {
        for (int i = 0; i < d; ++i) {
            const double wi = w[i] - mean[i];
            for (int j = i; j < d; ++j)
                cov[static_cast<std::size_t>(i) * d + j] += wi * (w[j] - mean[j]);
        }
    }
    const double norm = 1.0 / static_cast<double>(reference.size() - 1);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            cov[static_cast<std::size_t>(i) * d + j] *= norm;
            cov[static_cast<std::size_t>(j) * d + i] = cov[static_cast<std::size_t>(i) * d + j];
        }

    std::vector<double> diag = cov, vecs;
    jacobi_eigen(diag, vecs, d);

    double total = 0.0;
    std::vector<std::pair<double, int>> eig(d);
    for (int i = 0; i < d; ++i) {
        const double lam = diag[static_cast<std::size_t>(i) * d + i];
        eig[i] = {lam, i};
        total += std::max(lam, 0.0);
    }
    std::sort(eig.begin(), eig.end(), [](auto& a, auto& b) { return a.first > b.first; });
    if (!(eig[0].first > 0.0)) throw contract_error("pca2: reference data has rank 0");

    PcaProjection out;
    out.explained_variance_ratio = {eig[0].first / total,
                                    d > 1 ? std::max(eig[1].first, 0.0) / total : 0.0};
    auto project = [&](const std::vector<double>& w) {
        std::array<double, 2> p{0.0, 0.0};
        for (int comp = 0; comp < 2 && comp < d; ++comp) {
            const int col = eig[comp].second;
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += (w[j] - mean[j]) * vecs[static_cast<std::size_t>(j) * d + col];
            p[comp] = acc;
        }
        return p;
    };
    for (const auto& w : reference) out.reference.push_back(project(w));
    for (const auto& w : generated) out.generated.push_back(project(w));
    return out;
}

}  // namespace tpidm
