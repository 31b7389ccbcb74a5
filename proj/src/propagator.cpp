#include "lrlab/propagator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <unsupported/Eigen/MatrixFunctions>

namespace lrlab {

Integrator integrator_from_string(const std::string& name) {
    if (name == "auto") return Integrator::Auto;
    if (name == "exact_static") return Integrator::ExactStatic;
    if (name == "magnus2") return Integrator::Magnus2;
    throw std::invalid_argument("unknown integrator: " + name);
}

Matrix unitary_exp(const Matrix& h, double dt) {
    const std::size_t dim = std::size_t(h.rows());
    if (dim <= 1024) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
        Eigen::VectorXcd phases(dim);
        for (std::size_t i = 0; i < dim; ++i)
            phases(i) = std::exp(Complex(0.0, -dt * es.eigenvalues()(i)));
        return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
    const Matrix u = (Complex(0.0, -dt) * h).exp();
    const double defect = (u.adjoint() * u - Matrix::Identity(dim, dim)).norm();
    if (defect > 1e-10) throw std::runtime_error("matrix exponential failed the unitarity certificate");
    return u;
}

// ============================================================================
// EvolutionSession
// ============================================================================

EvolutionSession::EvolutionSession(const ZeroChain& chain, Integrator integrator, double step_size,
                                   double tolerance)
    : chain_(chain), integrator_(integrator), step_size_(step_size), tolerance_(tolerance) {
    if (step_size_ <= 0) throw std::invalid_argument("step size must be positive");
    if (tolerance_ <= 0) throw std::invalid_argument("tolerance must be positive");
    if (integrator_ == Integrator::Auto)
        integrator_ = chain_.is_static() ? Integrator::ExactStatic : Integrator::Magnus2;
    if (integrator_ == Integrator::ExactStatic && !chain_.is_static())
        throw std::invalid_argument("exact_static integrator requires a static chain");
    footprint_ = chain_.footprint();
}

const EvolutionSession::RegionData& EvolutionSession::region_for(const LatticeOperator& a) const {
    std::set<std::size_t> region_set(footprint_.begin(), footprint_.end());
    region_set.insert(a.support.begin(), a.support.end());
    std::vector<std::size_t> region(region_set.begin(), region_set.end());

    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(region);
    if (it != cache_.end()) return it->second;

    RegionData rd;
    rd.region = region;
    a.ctx->block_dim(region.size());  // enforce the dense cap before building blocks
    for (const auto& [x, ts] : chain_.terms()) {
        for (const auto& term : ts) {
            rd.term_blocks.push_back(embed(term.op, region).block);
            rd.term_coeffs.push_back(term.coeff);
        }
    }
    if (integrator_ == Integrator::ExactStatic) {
        const Matrix h = hamiltonian_at(rd, chain_.t_min());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
        rd.eigenvalues = es.eigenvalues();
        rd.eigenvectors = es.eigenvectors();
        rd.has_eigen = true;
    }
    return cache_.emplace(std::move(region), std::move(rd)).first->second;
}

Matrix EvolutionSession::hamiltonian_at(const RegionData& rd, double t) const {
    if (rd.term_blocks.empty()) return Matrix();
    Matrix h = Matrix::Zero(rd.term_blocks[0].rows(), rd.term_blocks[0].cols());
    for (std::size_t i = 0; i < rd.term_blocks.size(); ++i)
        h += rd.term_coeffs[i](t) * rd.term_blocks[i];
    return h;
}

Matrix EvolutionSession::unitary(const RegionData& rd, double s, double t, double step) const {
    const std::size_t dim = std::size_t(rd.term_blocks.empty() ? 1 : rd.term_blocks[0].rows());
    if (s == t || rd.term_blocks.empty()) return Matrix::Identity(dim, dim);

    if (rd.has_eigen) {
        Eigen::VectorXcd phases(dim);
        for (std::size_t i = 0; i < dim; ++i)
            phases(i) = std::exp(Complex(0.0, -(t - s) * rd.eigenvalues(i)));
        return rd.eigenvectors * phases.asDiagonal() * rd.eigenvectors.adjoint();
    }

    // midpoint-exponential steps; unitary by construction per step
    const double span = t - s;
    const std::size_t n_steps = std::max<std::size_t>(1, std::size_t(std::ceil(std::abs(span) / step)));
    const double h = span / double(n_steps);
    Matrix u = Matrix::Identity(dim, dim);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double mid = s + (double(i) + 0.5) * h;
        u = (unitary_exp(hamiltonian_at(rd, mid), h) * u).eval();
    }
    return u;
}

LatticeOperator EvolutionSession::evolve(double s, double t, const LatticeOperator& a) const {
    if (!chain_.contains_time(s) || !chain_.contains_time(t))
        throw std::invalid_argument("evolution endpoints outside the chain interval");
    if (s == t) return a;

    // operators away from the chain footprint are untouched, exactly
    bool touches = false;
    for (std::size_t x : a.support)
        if (std::binary_search(footprint_.begin(), footprint_.end(), x)) touches = true;
    if (!touches || chain_.empty()) return a;

    const auto& rd = region_for(a);
    const auto a_region = embed(a, rd.region);

    if (rd.has_eigen) {
        const Matrix u = unitary(rd, s, t, step_size_);
        return {a.ctx, rd.region, (u.adjoint() * a_region.block * u).eval()};
    }

    // fixed-step result plus a half-step re-run as the convergence certificate
    const Matrix u1 = unitary(rd, s, t, step_size_);
    Matrix result = u1.adjoint() * a_region.block * u1;
    double step = step_size_ / 2.0;
    for (int refine = 0; refine < 6; ++refine) {
        const Matrix u2 = unitary(rd, s, t, step);
        const Matrix refined = u2.adjoint() * a_region.block * u2;
        const double err = op_norm((refined - result).eval());
        result = refined;
        if (err <= tolerance_) return {a.ctx, rd.region, std::move(result)};
        step /= 2.0;
    }
    throw std::runtime_error("time integration did not certify the requested tolerance");
}

// ============================================================================
// Plan-level entry points
// ============================================================================

LatticeOperator evolve(const PropagatorPlan& plan, const LatticeOperator& a) {
    if (!plan.chain) throw std::invalid_argument("plan without a chain");
    EvolutionSession session(*plan.chain, plan.integrator, plan.step_size, plan.tolerance);
    if (session.effective_integrator() == Integrator::Magnus2 && plan.t != plan.s &&
        plan.step_size > std::abs(plan.t - plan.s))
        throw std::invalid_argument("step size exceeds the evolution span");
    return session.evolve(plan.s, plan.t, a);
}

LatticeOperator compose(const PropagatorPlan& first, const PropagatorPlan& second,
                        const LatticeOperator& a) {
    if (first.chain != second.chain) throw std::invalid_argument("plans use different chains");
    if (first.t != second.s) throw std::invalid_argument("mismatched intermediate time");
    EvolutionSession session(*first.chain, first.integrator, first.step_size, first.tolerance);
    // cocycle order: alpha_{s,t} alpha_{t,u} = alpha_{s,u}
    const auto inner = session.evolve(second.s, second.t, a);
    return session.evolve(first.s, first.t, inner);
}

double generator_residual(const ZeroChain& chain, double s, double t, const LatticeOperator& a,
                          double h, double tolerance, double step_size) {
    if (h == 0.0) throw std::invalid_argument("difference step must be nonzero");
    if (!chain.contains_time(t - h) || !chain.contains_time(t + h))
        throw std::invalid_argument("difference stencil leaves the chain interval");

    EvolutionSession session(chain, Integrator::Auto, step_size, tolerance);
    const auto plus = session.evolve(s, t + h, a);
    const auto minus = session.evolve(s, t - h, a);
    auto derivative = scale(1.0 / (2.0 * h), sub(plus, minus));

    const auto generator_applied = scale(Complex(0.0, 1.0), liouvillian_apply(chain, t, a));
    const auto transported = session.evolve(s, t, generator_applied);
    return distance(derivative, transported);
}

}  // namespace lrlab
