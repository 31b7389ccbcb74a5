#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lrlab/decay.hpp"

namespace lrlab {

/// Exact engine for spin-1/2 chains whose terms are quadratic in the
/// Jordan-Wigner Majorana representation:
///
///   H = sum_x J_x sz_x sz_{x+1} + h_x sx_x
///
/// With gamma_{2j} = (prod_{l<j} sx_l) sz_j and gamma_{2j+1} = (prod_{l<j}
/// sx_l) sy_j one has sx_j = i g_{2j} g_{2j+1} and sz_j sz_{j+1} = i g_{2j+1}
/// g_{2j+2}, so H and the observables sx_j stay inside the space of
/// quadratic operators X = (i/4) gamma^T M gamma with M real antisymmetric.
/// There, Heisenberg evolution is an orthogonal rotation of M, the operator
/// norm is a quarter of the nuclear norm of M, and the conditional
/// expectation onto an interval of sites keeps exactly the entries whose
/// site interval is contained in it. Everything is exact; no dense caps.
///
/// The bilinear g_a g_b is supported on the full site interval
/// [site(a), site(b)] (the strings put sx on the sites in between), which is
/// why interval containment, not endpoint membership, drives the projection.
struct QuadraticChain {
    std::size_t length = 0;
    std::size_t x0 = 0;
    Eigen::VectorXd bonds;   // J_x, x = 0..length-2, owned by the left site
    Eigen::VectorXd fields;  // h_x, x = 0..length-1

    /// Antisymmetric 2L x 2L single-particle form K with H = (i/4) g^T K g.
    Eigen::MatrixXd hamiltonian_form() const;

    /// Same truncation rule as the dense zero-chain: site terms survive iff
    /// d(x, x0) <= k/2, and bond terms additionally need k >= 2 so that the
    /// per-term conditional expectation keeps them whole.
    QuadraticChain truncated(double k) const;
};

struct QuadraticObservable {
    Eigen::MatrixXd form;  // antisymmetric, 2L x 2L
};

QuadraticObservable quadratic_sigma_x(std::size_t length, std::size_t site);

/// Operator norm ||X|| = nuclear(M) / 4.
double quadratic_norm(const QuadraticObservable& x);

/// Commutator norm ||[X, Y]|| (the bilinears close under commutators).
double quadratic_commutator_norm(const QuadraticObservable& x, const QuadraticObservable& y);

/// E_{[lo,hi]}(X): keeps entries with both sites inside the interval.
QuadraticObservable quadratic_project_interval(const QuadraticObservable& x, long lo, long hi,
                                               std::size_t length);

/// ||(1 - E_{B_r(x0)}) X||.
double quadratic_ball_residual(const QuadraticObservable& x, std::size_t x0, double r,
                               std::size_t length);

/// || X ||_{F,x0} over the chain's realized radii (see localized_norm).
double quadratic_localized_norm(const QuadraticObservable& x, const DecayFunction& F,
                                std::size_t x0, std::size_t length);

/// Heisenberg evolution alpha_{s,t}(X) for the static chain; caches the
/// eigendecomposition of the single-particle form.
class QuadraticPropagator {
  public:
    explicit QuadraticPropagator(const QuadraticChain& chain);
    QuadraticObservable evolve(double s, double t, const QuadraticObservable& x) const;

  private:
    std::size_t length_;
    Eigen::VectorXd eigenvalues_;   // of i K (real, symmetric pairs)
    Eigen::MatrixXcd eigenvectors_;
};

}  // namespace lrlab
