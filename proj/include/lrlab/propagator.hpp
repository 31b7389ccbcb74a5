#pragma once

#include <map>
#include <mutex>

#include "lrlab/zero_chain.hpp"

namespace lrlab {

enum class Integrator { Auto, ExactStatic, Magnus2 };

Integrator integrator_from_string(const std::string& name);

/// One finite-lattice Heisenberg evolution request. Convention:
/// alpha_{s,t}(A) = U(t,s)* A U(t,s) with i dU/dt = H(t) U, U(s,s) = 1, which
/// satisfies d/dt alpha_{s,t} A = alpha_{s,t}( i [H(t), A] ) and the cocycle
/// order alpha_{s,t} alpha_{t,u} = alpha_{s,u}.
struct PropagatorPlan {
    const ZeroChain* chain = nullptr;  // usually a truncated chain
    double s = 0.0;
    double t = 0.0;
    Integrator integrator = Integrator::Auto;
    double step_size = 1.0 / 64.0;
    double tolerance = 1e-8;
};

/// Reusable evolution engine for one chain: caches per-region Hamiltonian
/// blocks and, for static chains, their eigendecompositions.
class EvolutionSession {
  public:
    EvolutionSession(const ZeroChain& chain, Integrator integrator = Integrator::Auto,
                     double step_size = 1.0 / 64.0, double tolerance = 1e-8);

    /// alpha_{s,t}(A). Operators supported away from the chain footprint are
    /// returned unchanged (the unitary acts only on the footprint).
    LatticeOperator evolve(double s, double t, const LatticeOperator& a) const;

    const ZeroChain& chain() const { return chain_; }
    double tolerance() const { return tolerance_; }
    double step_size() const { return step_size_; }
    Integrator effective_integrator() const { return integrator_; }

  private:
    struct RegionData {
        std::vector<std::size_t> region;
        std::vector<Matrix> term_blocks;      // static pieces embedded on the region
        std::vector<CoeffFn> term_coeffs;
        Eigen::VectorXd eigenvalues;          // static chains only
        Matrix eigenvectors;
        bool has_eigen = false;
    };

    const RegionData& region_for(const LatticeOperator& a) const;
    Matrix hamiltonian_at(const RegionData& rd, double t) const;
    Matrix unitary(const RegionData& rd, double s, double t, double step) const;

    const ZeroChain& chain_;
    Integrator integrator_;
    double step_size_;
    double tolerance_;
    std::vector<std::size_t> footprint_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::vector<std::size_t>, RegionData> cache_;
};

LatticeOperator evolve(const PropagatorPlan& plan, const LatticeOperator& a);

/// alpha_{s,t}(alpha_{t,u}(A)); plans must share the chain and the
/// intermediate time.
LatticeOperator compose(const PropagatorPlan& first, const PropagatorPlan& second,
                        const LatticeOperator& a);

/// Centered-difference defect of the generator equation at time t:
/// || (alpha_{s,t+h} A - alpha_{s,t-h} A) / (2h) - alpha_{s,t}(i L_{Phi(t)} A) ||.
/// O(h^2) for smooth coefficient functions.
double generator_residual(const ZeroChain& chain, double s, double t, const LatticeOperator& a,
                          double h, double tolerance = 1e-10, double step_size = 1.0 / 256.0);

/// exp(-i dt H) for self-adjoint H: eigendecomposition up to dimension 1024,
/// scaling-and-squaring beyond, certified unitary to 1e-10.
Matrix unitary_exp(const Matrix& h, double dt);

}  // namespace lrlab
