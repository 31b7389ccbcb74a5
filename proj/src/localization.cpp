#include "lrlab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lrlab {

double tail_supremum(const std::vector<double>& radii, const std::vector<double>& residuals,
                     const DecayFunction& F) {
    if (radii.size() != residuals.size()) throw std::invalid_argument("radii/residual size mismatch");
    double sup = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (residuals[i] == 0.0) continue;
        sup = std::max(sup, residuals[i] / F(radii[i]));
        if (i + 1 < radii.size()) sup = std::max(sup, residuals[i] / F(radii[i + 1]));
    }
    return sup;
}

double localized_norm(const LatticeOperator& a, const DecayFunction& F, std::size_t x) {
    const auto& g = a.ctx->graph();
    if (x >= g.size()) throw std::invalid_argument("unknown center site");

    const double base = op_norm(a);
    if (a.support.empty() || (a.support.size() == 1 && a.support[0] == x)) return base;

    // The residual jumps only when the ball swallows another support site.
    std::set<double> cuts{0.0};
    for (std::size_t s : a.support) cuts.insert(g.distance(x, s));
    std::vector<double> radii(cuts.begin(), cuts.end());

    if (!F.is_monotone()) {
        // non-monotone F: refine with every graph-realized radius up to the
        // support diameter (approximate; exactness is only claimed for
        // monotone rules)
        const double r_last = radii.back();
        for (double r : g.realized_radii(x))
            if (r < r_last) cuts.insert(r);
        radii.assign(cuts.begin(), cuts.end());
    }

    std::vector<double> residuals(radii.size(), 0.0);
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
        const auto projected = conditional_expectation(a, g.ball(x, radii[i]));
        residuals[i] = distance(a, projected);
    }
    // at the largest cut the ball covers the support, so the residual is 0

    return base + tail_supremum(radii, residuals, F);
}

}  // namespace lrlab
