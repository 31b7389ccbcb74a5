#include "lrlab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lrlab {

DecayFunction DecayFunction::power_law(double nu) {
    if (nu < 0) throw std::invalid_argument("power_law exponent must be >= 0");
    DecayFunction f(Rule::PowerLaw, nu);
    f.declared_nu_ = nu;
    return f;
}

DecayFunction DecayFunction::exponential(double b) {
    if (b <= 0) throw std::invalid_argument("exponential rate must be positive");
    DecayFunction f(Rule::Exponential, b);
    f.declared_nu_ = std::numeric_limits<double>::infinity();
    return f;
}

DecayFunction DecayFunction::constant() {
    DecayFunction f(Rule::Constant, 0.0);
    f.declared_nu_ = 0.0;
    return f;
}

DecayFunction DecayFunction::tabulated(std::vector<double> grid, std::vector<double> values,
                                       std::optional<double> declared_nu) {
    if (grid.size() != values.size() || grid.empty())
        throw std::invalid_argument("tabulated decay: grid/value size mismatch");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (grid[i + 1] <= grid[i]) throw std::invalid_argument("tabulated decay: grid not increasing");
    for (double v : values)
        if (!(v > 0)) throw std::invalid_argument("decay function must be positive");
    DecayFunction f(Rule::Tabulated, 0.0);
    f.tab_grid_ = std::move(grid);
    f.tab_values_ = std::move(values);
    f.declared_nu_ = declared_nu;
    return f;
}

double DecayFunction::operator()(double r) const {
    switch (rule_) {
        case Rule::PowerLaw: return std::pow(1.0 + r, -param_);
        case Rule::Exponential: return std::exp(-param_ * r);
        case Rule::Constant: return 1.0;
        case Rule::Tabulated: {
            if (r <= tab_grid_.front()) return tab_values_.front();
            if (r >= tab_grid_.back()) return tab_values_.back();
            const auto it = std::upper_bound(tab_grid_.begin(), tab_grid_.end(), r);
            const std::size_t j = std::size_t(it - tab_grid_.begin());
            const double t = (r - tab_grid_[j - 1]) / (tab_grid_[j] - tab_grid_[j - 1]);
            return (1.0 - t) * tab_values_[j - 1] + t * tab_values_[j];
        }
    }
    return 1.0;
}

std::string DecayFunction::describe() const {
    std::ostringstream os;
    switch (rule_) {
        case Rule::PowerLaw: os << "power_law(" << param_ << ")"; break;
        case Rule::Exponential: os << "exponential(" << param_ << ")"; break;
        case Rule::Constant: os << "constant"; break;
        case Rule::Tabulated: os << "tabulated[" << tab_grid_.size() << "]"; break;
    }
    return os.str();
}

namespace {

// log-spaced radii in [0, r_max]: 0, then geometric from 1e-2 up
std::vector<double> radius_grid(double r_max, std::size_t points = 512) {
    std::vector<double> rs{0.0};
    const double lo = std::log(1e-2), hi = std::log(std::max(r_max, 1e-2));
    for (std::size_t i = 0; i <= points; ++i)
        rs.push_back(std::exp(lo + (hi - lo) * double(i) / double(points)));
    return rs;
}

}  // namespace

NuLowerBound nu_lower_bound(const DecayFunction& F, const std::vector<double>& nu_grid, double r_max) {
    if (nu_grid.empty()) throw std::invalid_argument("nu grid must not be empty");
    for (std::size_t i = 0; i + 1 < nu_grid.size(); ++i)
        if (nu_grid[i + 1] < nu_grid[i]) throw std::invalid_argument("nu grid must be ascending");

    const auto rs = radius_grid(r_max);
    const double ceiling = 1e6 * F(0.0);

    auto passes = [&](double nu) {
        double sup = 0.0;
        for (double r : rs) sup = std::max(sup, F(r) * std::pow(1.0 + r, nu));
        if (sup > ceiling) return false;
        // growth-trend test on the last decade: slope of log g vs log r <= 0.05
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t m = 0;
        for (double r : rs) {
            if (r < r_max / 10.0 || r <= 0) continue;
            const double lx = std::log(r);
            const double ly = std::log(std::max(F(r) * std::pow(1.0 + r, nu), 1e-300));
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
            ++m;
        }
        if (m < 2) return true;
        const double denom = double(m) * sxx - sx * sx;
        if (denom <= 0) return true;
        const double slope = (double(m) * sxy - sx * sy) / denom;
        return slope <= 0.05;
    };

    NuLowerBound out;
    bool any = false;
    for (double nu : nu_grid) {
        if (passes(nu)) {
            out.value = nu;
            any = true;
        } else {
            break;  // admissible exponents form a down-set
        }
    }
    if (!any) out.value = 0.0;  // nu = 0 is always admissible for bounded F
    out.at_grid_max = any && out.value == nu_grid.back();
    return out;
}

SupCheckResult lemma_sup_check(const DecayFunction& F, double nu, double k_max,
                               double m_grid_density) {
    if (nu < 0) throw std::invalid_argument("nu must be >= 0");
    if (k_max <= 0 || m_grid_density <= 0)
        throw std::invalid_argument("k_max and m_grid_density must be positive");
    if (F.declared_nu() && nu >= *F.declared_nu())
        throw std::invalid_argument("nu must lie below the decay exponent of F");

    const double m_max = std::max(4.0 * (k_max + 1.0), 64.0);
    const double dk = 0.25;
    const double dm = 1.0 / m_grid_density;

    SupCheckResult res;
    double tail_max = 0.0, body_max = 0.0;
    for (double k = 0.0; k <= k_max + 1e-12; k += dk) {
        for (double m = k / 2.0; m <= m_max + 1e-12; m += dm) {
            const double v = std::pow(1.0 + m, nu) * F(positive_part(0.75 * m - 0.25 * (k + 1.0)));
            if (v > res.supremum) {
                res.supremum = v;
                res.at_k = k;
                res.at_m = m;
            }
            if (m > 0.9 * m_max) tail_max = std::max(tail_max, v);
            else body_max = std::max(body_max, v);
        }
    }
    // unbounded growth shows up as the sup living on the tail edge of the m grid
    res.bounded = tail_max < body_max || res.at_m < 0.9 * m_max;
    return res;
}

}  // namespace lrlab
