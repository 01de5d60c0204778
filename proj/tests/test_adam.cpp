#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tpidm/adam.hpp"

using namespace tpidm;

namespace {

// Straight transcription of the update rule, kept independent of the
// implementation under test.
void reference_step(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v, int step, double lr, double b1, double b2, double eps,
                    double l2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mh = m[i] / (1.0 - std::pow(b1, step));
        const double vh = v[i] / (1.0 - std::pow(b2, step));
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
        p[i] -= lr * l2 * p[i];
    }
}

}  // namespace

TEST_CASE("adam matches a hand transcription over several steps") {
    std::vector<double> p{0.5, -1.0, 2.0};
    std::vector<double> ref = p;
    AdamState st(p.size(), 1e-2, 1e-3);
    std::vector<double> m(p.size(), 0.0), v(p.size(), 0.0);

    const std::vector<std::vector<double>> grads{
        {1.0, -2.0, 0.5}, {0.1, 0.1, 0.1}, {-3.0, 0.0, 1.0}};
    for (int s = 0; s < 3; ++s) {
        adam_step(p, grads[s], st);
        reference_step(ref, grads[s], m, v, s + 1, st.lr, st.beta1, st.beta2, st.eps, st.l2);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
}

TEST_CASE("first step moves each coordinate by about lr against the gradient sign") {
    std::vector<double> p{0.0, 0.0};
    AdamState st(2, 1e-3, 0.0);
    adam_step(p, {5.0, -0.25}, st);
    // bias-corrected first step is lr * g / (|g| + eps) = ~lr * sign(g)
    CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(1e-3).epsilon(1e-5));
}

TEST_CASE("decoupled shrinkage acts even under zero gradient") {
    std::vector<double> p{100.0};
    AdamState st(1, 1e-2, 1e-2);
    adam_step(p, {0.0}, st);
    // no Adam movement (g = 0), only p -= lr*l2*p
    CHECK(p[0] == doctest::Approx(100.0 * (1.0 - 1e-4)).epsilon(1e-12));
}

TEST_CASE("size mismatch is a contract violation") {
    std::vector<double> p{1.0, 2.0};
    AdamState st(2);
    CHECK_THROWS_AS(adam_step(p, std::vector<double>{1.0}, st), contract_error);
}
