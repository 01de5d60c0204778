#ifndef TPIDM_GRADCHECK_HPP
#define TPIDM_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace tpidm {

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
// Non-finite comparisons report infinity.
inline double grad_check(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> params,
                         const std::vector<double>& analytic,
                         double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double fp = f(params);
        params[i] = saved - h;
        const double fm = f(params);
        params[i] = saved;
        const double cd = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        if (!std::isfinite(cd) || !std::isfinite(a))
            return std::numeric_limits<double>::infinity();
        const double err = std::abs(a - cd) / std::max(1.0, std::abs(a));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace tpidm

#endif
