#pragma once

#include <cstddef>
#include <vector>

namespace lrlab {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;  // in the fitted ordinate
    std::size_t n_points = 0;
    bool valid = false;  // requires >= 4 points
    double x_min = 0.0, x_max = 0.0;
};

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Linear r(t) model against exponential r(t) = exp(a + b t) - 1, fitted as
/// ln(1+r) vs t. Both residuals are also reported in r-space so the two
/// models are directly comparable.
struct GrowthModelComparison {
    FitResult linear;
    FitResult log_linear;
    double linear_rms_r = 0.0;
    double exponential_rms_r = 0.0;
};

GrowthModelComparison compare_growth_models(const std::vector<double>& t,
                                            const std::vector<double>& r);

/// Affine upper envelope of y(t): least-squares line shifted up until it
/// dominates the data. residual_rel normalizes the envelope-to-data RMS gap
/// by the data range.
struct EnvelopeFit {
    FitResult base;
    double shift = 0.0;
    double residual_rel = 0.0;
};

EnvelopeFit affine_envelope(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace lrlab
