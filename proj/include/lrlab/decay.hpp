#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lrlab {

inline double positive_part(double x) { return x >= 0.0 ? x : 0.0; }

/// Bounded positive function of radius used to weight localization tails.
/// Closed forms carry their decay exponent; tabulated rules may declare one.
class DecayFunction {
  public:
    enum class Rule { PowerLaw, Exponential, Constant, Tabulated };

    static DecayFunction power_law(double nu);
    static DecayFunction exponential(double b);
    static DecayFunction constant();
    /// values[i] is F at radius grid[i]; evaluation interpolates linearly and
    /// holds the last value beyond the grid.
    static DecayFunction tabulated(std::vector<double> grid, std::vector<double> values,
                                   std::optional<double> declared_nu = std::nullopt);

    double operator()(double r) const;
    Rule rule() const { return rule_; }
    double param() const { return param_; }

    /// Decay exponent when known in closed form (infinity for exponential).
    std::optional<double> declared_nu() const { return declared_nu_; }
    bool is_monotone() const { return rule_ != Rule::Tabulated; }

    std::string describe() const;

  private:
    DecayFunction(Rule rule, double param) : rule_(rule), param_(param) {}
    Rule rule_;
    double param_ = 0.0;
    std::optional<double> declared_nu_;
    std::vector<double> tab_grid_, tab_values_;
};

struct NuLowerBound {
    double value = 0.0;
    bool at_grid_max = false;  // even the largest grid nu passed
};

/// Largest grid nu for which F(r)(1+r)^nu stays below 1e6*F(0) on [0, r_max]
/// and shows no growth trend over the last decade of radii.
NuLowerBound nu_lower_bound(const DecayFunction& F, const std::vector<double>& nu_grid, double r_max);

struct SupCheckResult {
    double supremum = 0.0;
    double at_k = 0.0;
    double at_m = 0.0;
    bool bounded = true;  // false when the tail in m still grows
};

/// Grid evaluation of sup_{0<=k<=k_max} sup_{m>=k/2} (1+m)^nu F((3m/4-(k+1)/4)_+).
/// Requires nu below the decay exponent of F when the latter is declared.
SupCheckResult lemma_sup_check(const DecayFunction& F, double nu, double k_max,
                               double m_grid_density);

}  // namespace lrlab
