#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lrlab/lattice.hpp"

namespace lrlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

enum class Backend { Spin, Fermion };

/// Shared, immutable description of the on-site algebra living over a graph.
///
/// Spin: local dimension d per site, true tensor-product structure.
/// Fermion: n flavors per site, Jordan-Wigner represented; restricted to path
/// graphs so that the mode order (site, flavor) is unambiguous.
class AlgebraContext : public std::enable_shared_from_this<AlgebraContext> {
  public:
    static std::shared_ptr<const AlgebraContext> spin(std::shared_ptr<const MetricGraph> graph,
                                                      int local_dim = 2,
                                                      std::size_t dense_dim_cap = 4096);
    static std::shared_ptr<const AlgebraContext> fermion(std::shared_ptr<const MetricGraph> graph,
                                                         int flavors = 1,
                                                         std::size_t dense_dim_cap = 4096);

    Backend backend() const { return backend_; }
    const MetricGraph& graph() const { return *graph_; }
    std::shared_ptr<const MetricGraph> graph_ptr() const { return graph_; }
    int local_dim() const { return local_dim_; }  // spin only
    int flavors() const { return flavors_; }      // fermion only
    std::size_t dense_dim_cap() const { return dense_dim_cap_; }

    /// Hilbert-space dimension of one site (d or 2^flavors).
    std::size_t site_dim() const;
    /// Dimension of a block over `n_sites` sites; throws resource_limit_error
    /// past the dense cap.
    std::size_t block_dim(std::size_t n_sites) const;

  private:
    AlgebraContext() = default;
    Backend backend_ = Backend::Spin;
    std::shared_ptr<const MetricGraph> graph_;
    int local_dim_ = 2;
    int flavors_ = 1;
    std::size_t dense_dim_cap_ = 4096;
};

using ContextPtr = std::shared_ptr<const AlgebraContext>;

/// Finite-support operator: a dense block over an explicitly declared support.
/// The support is the declared localization region, not necessarily minimal.
struct LatticeOperator {
    ContextPtr ctx;
    std::vector<std::size_t> support;  // strictly ascending site indices
    Matrix block;                      // dim = site_dim^|support|

    std::size_t dim() const { return static_cast<std::size_t>(block.rows()); }
};

// ============================================================================
// Builders
// ============================================================================

LatticeOperator identity_op(const ContextPtr& ctx, std::vector<std::size_t> support = {});
/// Spin backend: arbitrary d x d matrix at one site.
LatticeOperator single_site_op(const ContextPtr& ctx, std::size_t site, const Matrix& m);
/// Spin-1/2 Pauli operator, axis in {'x','y','z'}.
LatticeOperator pauli(const ContextPtr& ctx, std::size_t site, char axis);

/// Fermionic creation/annihilation operators a*_{x,i}, a_{x,i} with support {x}.
LatticeOperator car_creation(const ContextPtr& ctx, std::size_t site, int flavor = 0);
LatticeOperator car_annihilation(const ContextPtr& ctx, std::size_t site, int flavor = 0);
/// Number operator n_x = sum_i a*_{x,i} a_{x,i}.
LatticeOperator number_op(const ContextPtr& ctx, std::size_t site);

LatticeOperator random_operator(const ContextPtr& ctx, std::vector<std::size_t> support,
                                std::mt19937_64& rng);
LatticeOperator random_hermitian(const ContextPtr& ctx, std::vector<std::size_t> support,
                                 std::mt19937_64& rng);
/// Random even operator (parity-symmetrized on the fermion backend).
LatticeOperator random_even(const ContextPtr& ctx, std::vector<std::size_t> support,
                            std::mt19937_64& rng);

// ============================================================================
// Algebraic operations
// ============================================================================

/// Same abstract operator over the larger support M'. Identity padding for
/// spins; Jordan-Wigner strings are inserted where needed for fermions.
LatticeOperator embed(const LatticeOperator& a, std::vector<std::size_t> enlarged_support);

LatticeOperator adjoint(const LatticeOperator& a);
LatticeOperator scale(Complex c, const LatticeOperator& a);
LatticeOperator add(const LatticeOperator& a, const LatticeOperator& b);
LatticeOperator sub(const LatticeOperator& a, const LatticeOperator& b);
LatticeOperator multiply(const LatticeOperator& a, const LatticeOperator& b);
LatticeOperator commutator(const LatticeOperator& a, const LatticeOperator& b);
LatticeOperator anticommutator(const LatticeOperator& a, const LatticeOperator& b);

/// Spectral norm. Exact solve below the exact-dimension threshold, seeded
/// power iteration on A*A above (tol 1e-10, at most 1e4 iterations).
double op_norm(const LatticeOperator& a);
double op_norm(const Matrix& m);

/// Normalized trace tr(A)/dim; the unique tracial state.
Complex tracial_state(const LatticeOperator& a);

/// Distance in operator norm after embedding both to the common support.
double distance(const LatticeOperator& a, const LatticeOperator& b);

/// Conditional expectation onto the subalgebra supported in M: the orthogonal
/// projection of the string expansion onto strings inside M. Computed as the
/// normalized partial trace on the spin backend and as Majorana-monomial
/// projection on the fermion backend (the two coincide where both apply).
LatticeOperator conditional_expectation(const LatticeOperator& a,
                                        const std::vector<std::size_t>& region);

/// Gauge automorphism g_phi = conjugation by exp(i phi N). Identity on spins.
LatticeOperator grading(const LatticeOperator& a, double phi);
bool is_even(const LatticeOperator& a, double tol = 1e-12);

// ============================================================================
// String expansions and serialization
// ============================================================================

/// Expansion of an operator over the orthonormal string basis of its support:
/// Pauli strings (d=2), Weyl strings (d>2) or ordered Majorana monomials.
struct StringExpansion {
    std::vector<std::string> labels;
    std::vector<Complex> coefficients;
};

StringExpansion expand(const LatticeOperator& a);
LatticeOperator reconstruct(const ContextPtr& ctx, const std::vector<std::size_t>& support,
                            const StringExpansion& expansion);

std::string to_json_text(const LatticeOperator& a);
LatticeOperator operator_from_json_text(const ContextPtr& ctx, const std::string& text);

}  // namespace lrlab
