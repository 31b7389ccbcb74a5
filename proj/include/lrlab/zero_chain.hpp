#pragma once

#include <map>
#include <optional>

#include "lrlab/algebra.hpp"
#include "lrlab/decay.hpp"

namespace lrlab {

/// Scalar coefficient of time; zero-chain terms are sums of separable
/// (static operator) x (coefficient) pieces.
struct CoeffFn {
    enum class Kind { Constant, Cosine };
    Kind kind = Kind::Constant;
    double value = 1.0;  // constant value, or cosine amplitude
    double omega = 0.0;
    double phase = 0.0;

    static CoeffFn constant(double c) { return {Kind::Constant, c, 0.0, 0.0}; }
    static CoeffFn cosine(double amplitude, double omega, double phase = 0.0) {
        return {Kind::Cosine, amplitude, omega, phase};
    }
    double operator()(double t) const {
        return kind == Kind::Constant ? value : value * std::cos(omega * t + phase);
    }
    bool is_constant() const { return kind == Kind::Constant; }
};

struct ChainTerm {
    LatticeOperator op;
    CoeffFn coeff;
};

/// Time-dependent zero-chain: an assignment x -> Phi_x(t) of self-adjoint,
/// even, finitely supported terms on an interval.
class ZeroChain {
  public:
    ZeroChain(ContextPtr ctx, double t_min = -16.0, double t_max = 16.0);

    void add_term(std::size_t site, LatticeOperator op, CoeffFn coeff = CoeffFn::constant(1.0));

    const ContextPtr& context() const { return ctx_; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    bool contains_time(double t) const { return t >= t_min_ && t <= t_max_; }
    bool is_static() const;

    const std::map<std::size_t, std::vector<ChainTerm>>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// Phi_x(t) assembled from the separable pieces; nullopt when x has none.
    std::optional<LatticeOperator> term_at(std::size_t site, double t) const;

    /// Union of the supports of all terms, ascending.
    std::vector<std::size_t> footprint() const;

  private:
    ContextPtr ctx_;
    double t_min_, t_max_;
    std::map<std::size_t, std::vector<ChainTerm>> terms_;
};

// ============================================================================
// Model zoo
// ============================================================================

/// Transverse-field Ising chain J sz_x sz_{x+1} + h sx_x, bond terms assigned
/// to their left site; time-independent.
ZeroChain model_uniform_tfim(const ContextPtr& ctx, double J, double h);

/// Scales base_x by (1 + slope * d(x, x0)).
ZeroChain model_linear_growth(const ZeroChain& base, std::size_t x0, double slope);

/// Uniform TFIM with both couplings modulated by cos(omega t).
ZeroChain model_time_modulated_tfim(const ContextPtr& ctx, double J, double h, double omega);

ZeroChain model_zero(const ContextPtr& ctx);

// ============================================================================
// Operations
// ============================================================================

struct GrowthProfile {
    double c_phi = 0.0;
    std::size_t x0 = 0;
    bool degenerate = false;  // c_phi == 0, no time scale available
};

struct ChainDiagnostics {
    bool self_adjoint = true;
    bool even = true;
    bool continuous = true;
    double max_self_adjoint_defect = 0.0;
};

/// Sampled invariant checks: self-adjointness and evenness of every term,
/// continuity of the coefficient functions.
ChainDiagnostics check_chain(const ZeroChain& chain, const std::vector<double>& t_samples,
                             double tol = 1e-12);

/// Default sampling grid: 64 points per unit time plus the endpoints.
std::vector<double> default_time_samples(double t_min, double t_max);

/// ||| Phi |||_G = sup_t sup_x || Phi_x(t) ||_{G,x} over the sampled times.
double uniform_norm(const ZeroChain& chain, const DecayFunction& G,
                    const std::vector<double>& t_samples);

/// C_phi = sup over samples of || Phi_x(t) ||_{G,x} / (1 + d(x,x0)).
GrowthProfile growth_coefficient(const ZeroChain& chain, const DecayFunction& G, std::size_t x0,
                                 const std::vector<double>& t_samples);

/// Truncation: Phi^k_x = E_{B_{k/2}(x)} Phi_x for x in B_{k/2}(x0), dropped
/// otherwise. The summed truncation is strictly localized in B_k(x0).
ZeroChain truncate(const ZeroChain& chain, double k, std::size_t x0);

/// L_Phi(t) A = sum_x [Phi_x(t), A]; terms with disjoint support are skipped
/// (zero-chain terms are even, so they contribute exactly zero).
LatticeOperator liouvillian_apply(const ZeroChain& chain, double t, const LatticeOperator& a);

/// sup over samples of || L_Phi(t) A - L_Phi^k(t) A || with Phi^k centered
/// at x0.
double liouvillian_truncation_gap(const ZeroChain& chain, double k, const LatticeOperator& a,
                                  const std::vector<double>& t_samples, std::size_t x0);

}  // namespace lrlab
