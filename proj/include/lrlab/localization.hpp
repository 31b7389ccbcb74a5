#pragma once

#include "lrlab/algebra.hpp"
#include "lrlab/decay.hpp"

namespace lrlab {

/// Supremum over radii of residual(r)/F(r) for a piecewise-constant residual
/// profile: residuals[i] holds on [radii[i], radii[i+1]). Left limits at the
/// jump radii are included, which makes the value exact for monotone F.
double tail_supremum(const std::vector<double>& radii, const std::vector<double>& residuals,
                     const DecayFunction& F);

/// Weighted localization norm ||A|| + sup_r ||(1 - E_{B_r(x)}) A|| / F(r).
/// The supremum is taken over the radii realized by the graph, exactly for
/// monotone F (see tail_supremum).
double localized_norm(const LatticeOperator& a, const DecayFunction& F, std::size_t x);

}  // namespace lrlab
