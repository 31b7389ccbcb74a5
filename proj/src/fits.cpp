#include "lrlab/fits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrlab {

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit input size mismatch");
    FitResult fit;
    fit.n_points = x.size();
    if (x.size() < 2) return fit;

    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;

    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += d * d;
    }
    fit.residual_rms = std::sqrt(ss / n);
    fit.x_min = *std::min_element(x.begin(), x.end());
    fit.x_max = *std::max_element(x.begin(), x.end());
    fit.valid = x.size() >= 4;
    return fit;
}

GrowthModelComparison compare_growth_models(const std::vector<double>& t,
                                            const std::vector<double>& r) {
    if (t.size() != r.size()) throw std::invalid_argument("fit input size mismatch");
    GrowthModelComparison cmp;
    cmp.linear = linear_fit(t, r);

    std::vector<double> lr(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < 0) throw std::invalid_argument("negative radius in growth-model fit");
        lr[i] = std::log1p(r[i]);
    }
    cmp.log_linear = linear_fit(t, lr);

    double ss_lin = 0.0, ss_exp = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double lin = cmp.linear.intercept + cmp.linear.slope * t[i];
        const double expm = std::expm1(cmp.log_linear.intercept + cmp.log_linear.slope * t[i]);
        ss_lin += (r[i] - lin) * (r[i] - lin);
        ss_exp += (r[i] - expm) * (r[i] - expm);
    }
    if (!t.empty()) {
        cmp.linear_rms_r = std::sqrt(ss_lin / double(t.size()));
        cmp.exponential_rms_r = std::sqrt(ss_exp / double(t.size()));
    }
    return cmp;
}

EnvelopeFit affine_envelope(const std::vector<double>& t, const std::vector<double>& y) {
    EnvelopeFit env;
    env.base = linear_fit(t, y);
    if (t.empty()) return env;

    double shift = -1e300, lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < t.size(); ++i) {
        shift = std::max(shift, y[i] - (env.base.intercept + env.base.slope * t[i]));
        lo = std::min(lo, y[i]);
        hi = std::max(hi, y[i]);
    }
    env.shift = shift;

    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = (env.base.intercept + shift + env.base.slope * t[i]) - y[i];
        ss += d * d;
    }
    const double range = std::max(hi - lo, 1e-12);
    env.residual_rel = std::sqrt(ss / double(t.size())) / range;
    return env;
}

}  // namespace lrlab
