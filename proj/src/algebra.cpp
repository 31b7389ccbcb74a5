#include "lrlab/algebra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lrlab {

using nlohmann::json;

namespace {

constexpr std::size_t kExactHermitianMax = 512;
constexpr std::size_t kExactSvdMax = 512;
constexpr std::size_t kMaxExpansionStrings = 1u << 16;

void check_support_sites(const MetricGraph& g, const std::vector<std::size_t>& support) {
    for (std::size_t s : support)
        if (s >= g.size()) throw std::invalid_argument("support contains unknown site");
    for (std::size_t i = 0; i + 1 < support.size(); ++i)
        if (support[i + 1] <= support[i])
            throw std::invalid_argument("support must be strictly ascending");
}

std::vector<std::size_t> sorted_union(const std::vector<std::size_t>& a,
                                      const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<std::size_t> sorted_intersection(const std::vector<std::size_t>& a,
                                             const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void check_same_context(const LatticeOperator& a, const LatticeOperator& b) {
    if (a.ctx != b.ctx) throw std::invalid_argument("operators live in different contexts");
}

// Digit scatter tables for interleaved tensor embedding. Digit m of a block
// index (first support site = most significant) lands at position pos[m] of
// the enlarged support.
std::vector<std::size_t> digit_scatter(std::size_t q, std::size_t n_digits,
                                       const std::vector<std::size_t>& positions,
                                       std::size_t enlarged_size) {
    std::vector<std::size_t> strides(enlarged_size, 1);
    for (std::size_t p = enlarged_size; p-- > 1;) strides[p - 1] = strides[p] * q;
    std::size_t dim = 1;
    for (std::size_t i = 0; i < n_digits; ++i) dim *= q;
    std::vector<std::size_t> table(dim, 0);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        std::size_t rest = idx;
        std::size_t acc = 0;
        for (std::size_t m = n_digits; m-- > 0;) {
            const std::size_t digit = rest % q;
            rest /= q;
            acc += digit * strides[positions[m]];
        }
        table[idx] = acc;
    }
    return table;
}

}  // namespace

// ============================================================================
// AlgebraContext
// ============================================================================

std::shared_ptr<const AlgebraContext> AlgebraContext::spin(std::shared_ptr<const MetricGraph> graph,
                                                           int local_dim,
                                                           std::size_t dense_dim_cap) {
    if (!graph) throw std::invalid_argument("null graph");
    if (local_dim < 2) throw std::invalid_argument("local dimension must be >= 2");
    auto ctx = std::shared_ptr<AlgebraContext>(new AlgebraContext());
    ctx->backend_ = Backend::Spin;
    ctx->graph_ = std::move(graph);
    ctx->local_dim_ = local_dim;
    ctx->dense_dim_cap_ = dense_dim_cap;
    return ctx;
}

std::shared_ptr<const AlgebraContext> AlgebraContext::fermion(std::shared_ptr<const MetricGraph> graph,
                                                              int flavors,
                                                              std::size_t dense_dim_cap) {
    if (!graph) throw std::invalid_argument("null graph");
    if (flavors < 1) throw std::invalid_argument("flavor count must be >= 1");
    if (!graph->is_path_graph())
        throw std::invalid_argument("fermion backend requires a chain (path metric)");
    auto ctx = std::shared_ptr<AlgebraContext>(new AlgebraContext());
    ctx->backend_ = Backend::Fermion;
    ctx->graph_ = std::move(graph);
    ctx->flavors_ = flavors;
    ctx->dense_dim_cap_ = dense_dim_cap;
    return ctx;
}

std::size_t AlgebraContext::site_dim() const {
    return backend_ == Backend::Spin ? std::size_t(local_dim_) : (std::size_t(1) << flavors_);
}

std::size_t AlgebraContext::block_dim(std::size_t n_sites) const {
    const std::size_t q = site_dim();
    std::size_t dim = 1;
    for (std::size_t i = 0; i < n_sites; ++i) {
        if (dim > dense_dim_cap_ / q + 1) throw resource_limit_error("block dimension exceeds dense cap");
        dim *= q;
    }
    if (dim > dense_dim_cap_) throw resource_limit_error("block dimension exceeds dense cap");
    return dim;
}

// ============================================================================
// Builders
// ============================================================================

LatticeOperator identity_op(const ContextPtr& ctx, std::vector<std::size_t> support) {
    check_support_sites(ctx->graph(), support);
    const std::size_t dim = ctx->block_dim(support.size());
    return {ctx, std::move(support), Matrix::Identity(dim, dim)};
}

LatticeOperator single_site_op(const ContextPtr& ctx, std::size_t site, const Matrix& m) {
    if (ctx->backend() != Backend::Spin) throw std::invalid_argument("single_site_op: spin backend only");
    check_support_sites(ctx->graph(), {site});
    if (m.rows() != ctx->local_dim() || m.cols() != ctx->local_dim())
        throw std::invalid_argument("single-site matrix has wrong dimension");
    return {ctx, {site}, m};
}

LatticeOperator pauli(const ContextPtr& ctx, std::size_t site, char axis) {
    if (ctx->local_dim() != 2) throw std::invalid_argument("pauli: local dimension must be 2");
    Matrix m(2, 2);
    const Complex i1(0.0, 1.0);
    switch (axis) {
        case 'x': m << 0, 1, 1, 0; break;
        case 'y': m << 0, -i1, i1, 0; break;
        case 'z': m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("pauli axis must be x, y or z");
    }
    return single_site_op(ctx, site, m);
}

namespace {

// Jordan-Wigner annihilation for mode `mu` of `total` modes inside one block.
// Mode 0 owns the most significant bit; occupied modes below mu contribute the
// string sign.
Matrix jw_annihilation(std::size_t total, std::size_t mu) {
    const std::size_t dim = std::size_t(1) << total;
    const std::size_t bit = total - 1 - mu;
    std::uint64_t above_mask = 0;  // modes nu < mu, i.e. bits above `bit`
    for (std::size_t nu = 0; nu < mu; ++nu) above_mask |= std::uint64_t(1) << (total - 1 - nu);
    Matrix a = Matrix::Zero(dim, dim);
    for (std::size_t j = 0; j < dim; ++j) {
        if (!(j >> bit & 1)) continue;
        const int sign = (std::popcount(std::uint64_t(j) & above_mask) % 2) ? -1 : 1;
        a(j ^ (std::size_t(1) << bit), j) = double(sign);
    }
    return a;
}

}  // namespace

LatticeOperator car_annihilation(const ContextPtr& ctx, std::size_t site, int flavor) {
    if (ctx->backend() != Backend::Fermion)
        throw std::invalid_argument("car operators require the fermion backend");
    if (flavor < 0 || flavor >= ctx->flavors()) throw std::invalid_argument("flavor out of range");
    check_support_sites(ctx->graph(), {site});
    return {ctx, {site}, jw_annihilation(ctx->flavors(), std::size_t(flavor))};
}

LatticeOperator car_creation(const ContextPtr& ctx, std::size_t site, int flavor) {
    auto a = car_annihilation(ctx, site, flavor);
    a.block = a.block.adjoint().eval();
    return a;
}

LatticeOperator number_op(const ContextPtr& ctx, std::size_t site) {
    if (ctx->backend() != Backend::Fermion)
        throw std::invalid_argument("number operator requires the fermion backend");
    check_support_sites(ctx->graph(), {site});
    const std::size_t dim = std::size_t(1) << ctx->flavors();
    Matrix n = Matrix::Zero(dim, dim);
    for (std::size_t j = 0; j < dim; ++j) n(j, j) = double(std::popcount(std::uint64_t(j)));
    return {ctx, {site}, n};
}

LatticeOperator random_operator(const ContextPtr& ctx, std::vector<std::size_t> support,
                                std::mt19937_64& rng) {
    check_support_sites(ctx->graph(), support);
    const std::size_t dim = ctx->block_dim(support.size());
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(dim, dim);
    for (std::size_t c = 0; c < dim; ++c)
        for (std::size_t r = 0; r < dim; ++r) m(r, c) = Complex(g(rng), g(rng));
    return {ctx, std::move(support), std::move(m)};
}

LatticeOperator random_hermitian(const ContextPtr& ctx, std::vector<std::size_t> support,
                                 std::mt19937_64& rng) {
    auto a = random_operator(ctx, std::move(support), rng);
    a.block = ((a.block + a.block.adjoint()) / 2.0).eval();
    return a;
}

LatticeOperator random_even(const ContextPtr& ctx, std::vector<std::size_t> support,
                            std::mt19937_64& rng) {
    auto a = random_operator(ctx, std::move(support), rng);
    if (ctx->backend() == Backend::Fermion) {
        auto flipped = grading(a, M_PI);
        a.block = ((a.block + flipped.block) / 2.0).eval();
    }
    return a;
}

// ============================================================================
// Embedding
// ============================================================================

namespace {

struct EmbedPlan {
    std::vector<std::size_t> scatter_s;  // block index of A -> partial index in M'
    std::vector<std::size_t> scatter_r;  // rest index -> partial index in M'
    std::size_t dim_s = 1, dim_r = 1;
    // fermion only: for each rest mode (local order), bitmask over A's modes
    // (A-local bit positions) that sit later in the global mode order.
    std::vector<std::uint64_t> s_modes_after_rest;
    std::size_t n_rest_modes = 0;
};

EmbedPlan make_embed_plan(const ContextPtr& ctx, const std::vector<std::size_t>& small,
                          const std::vector<std::size_t>& large) {
    EmbedPlan plan;
    std::vector<std::size_t> pos_s, pos_r;
    for (std::size_t p = 0; p < large.size(); ++p) {
        if (std::binary_search(small.begin(), small.end(), large[p]))
            pos_s.push_back(p);
        else
            pos_r.push_back(p);
    }
    const std::size_t q = ctx->site_dim();
    plan.dim_s = 1;
    for (std::size_t i = 0; i < pos_s.size(); ++i) plan.dim_s *= q;
    plan.dim_r = 1;
    for (std::size_t i = 0; i < pos_r.size(); ++i) plan.dim_r *= q;
    plan.scatter_s = digit_scatter(q, pos_s.size(), pos_s, large.size());
    plan.scatter_r = digit_scatter(q, pos_r.size(), pos_r, large.size());

    if (ctx->backend() == Backend::Fermion) {
        const std::size_t n = std::size_t(ctx->flavors());
        // global mode order = (site position in `large`, flavor)
        std::vector<std::size_t> s_mode_glob, r_mode_glob;
        for (std::size_t p : pos_s)
            for (std::size_t f = 0; f < n; ++f) s_mode_glob.push_back(p * n + f);
        for (std::size_t p : pos_r)
            for (std::size_t f = 0; f < n; ++f) r_mode_glob.push_back(p * n + f);
        plan.n_rest_modes = r_mode_glob.size();
        plan.s_modes_after_rest.resize(r_mode_glob.size(), 0);
        const std::size_t ms = s_mode_glob.size();
        for (std::size_t r = 0; r < r_mode_glob.size(); ++r) {
            std::uint64_t mask = 0;
            for (std::size_t p = 0; p < ms; ++p)
                if (s_mode_glob[p] > r_mode_glob[r]) mask |= std::uint64_t(1) << (ms - 1 - p);
            plan.s_modes_after_rest[r] = mask;
        }
    }
    return plan;
}

// Sign mask: rest-local bitmask of modes that pick up a Jordan-Wigner string
// from the occupancy changes T (A-local mode bitmask).
std::uint64_t rest_sign_mask(const EmbedPlan& plan, std::uint64_t t) {
    std::uint64_t mask = 0;
    for (std::size_t r = 0; r < plan.n_rest_modes; ++r)
        if (std::popcount(t & plan.s_modes_after_rest[r]) % 2)
            mask |= std::uint64_t(1) << (plan.n_rest_modes - 1 - r);
    return mask;
}

}  // namespace

LatticeOperator embed(const LatticeOperator& a, std::vector<std::size_t> enlarged_support) {
    check_support_sites(a.ctx->graph(), enlarged_support);
    if (!is_subset(a.support, enlarged_support))
        throw std::invalid_argument("embed: support not contained in target region");
    if (a.support == enlarged_support) return a;

    const std::size_t dim = a.ctx->block_dim(enlarged_support.size());
    const auto plan = make_embed_plan(a.ctx, a.support, enlarged_support);
    Matrix out = Matrix::Zero(dim, dim);

    const bool fermionic = a.ctx->backend() == Backend::Fermion;
    for (std::size_t is = 0; is < plan.dim_s; ++is) {
        for (std::size_t js = 0; js < plan.dim_s; ++js) {
            const Complex v = a.block(is, js);
            if (v == Complex(0.0, 0.0)) continue;
            std::uint64_t sign_mask = 0;
            if (fermionic) sign_mask = rest_sign_mask(plan, std::uint64_t(is ^ js));
            const std::size_t row_s = plan.scatter_s[is];
            const std::size_t col_s = plan.scatter_s[js];
            for (std::size_t ir = 0; ir < plan.dim_r; ++ir) {
                const double sgn = (std::popcount(std::uint64_t(ir) & sign_mask) % 2) ? -1.0 : 1.0;
                out(row_s + plan.scatter_r[ir], col_s + plan.scatter_r[ir]) = sgn * v;
            }
        }
    }
    return {a.ctx, std::move(enlarged_support), std::move(out)};
}

// ============================================================================
// Arithmetic
// ============================================================================

LatticeOperator adjoint(const LatticeOperator& a) {
    return {a.ctx, a.support, a.block.adjoint().eval()};
}

LatticeOperator scale(Complex c, const LatticeOperator& a) {
    return {a.ctx, a.support, (c * a.block).eval()};
}

LatticeOperator add(const LatticeOperator& a, const LatticeOperator& b) {
    check_same_context(a, b);
    if (a.support == b.support) return {a.ctx, a.support, (a.block + b.block).eval()};
    const auto u = sorted_union(a.support, b.support);
    auto ea = embed(a, u);
    const auto eb = embed(b, u);
    ea.block += eb.block;
    return ea;
}

LatticeOperator sub(const LatticeOperator& a, const LatticeOperator& b) {
    return add(a, scale(-1.0, b));
}

namespace {

// C = embed(A) * B with support(A) inside support(B): O(dim_B^2 * dim_A).
Matrix mult_small_left(const LatticeOperator& a, const LatticeOperator& b) {
    const auto plan = make_embed_plan(a.ctx, a.support, b.support);
    const std::size_t dim = b.dim();
    const bool fermionic = a.ctx->backend() == Backend::Fermion;
    Matrix out = Matrix::Zero(dim, dim);
    for (std::size_t is = 0; is < plan.dim_s; ++is) {
        for (std::size_t js = 0; js < plan.dim_s; ++js) {
            const Complex v = a.block(is, js);
            if (v == Complex(0.0, 0.0)) continue;
            std::uint64_t sign_mask = 0;
            if (fermionic) sign_mask = rest_sign_mask(plan, std::uint64_t(is ^ js));
            for (std::size_t ir = 0; ir < plan.dim_r; ++ir) {
                const double sgn = (std::popcount(std::uint64_t(ir) & sign_mask) % 2) ? -1.0 : 1.0;
                const std::size_t row = plan.scatter_s[is] + plan.scatter_r[ir];
                const std::size_t mid = plan.scatter_s[js] + plan.scatter_r[ir];
                out.row(row) += (sgn * v) * b.block.row(mid);
            }
        }
    }
    return out;
}

// C = B * embed(A), same containment assumption.
Matrix mult_small_right(const LatticeOperator& b, const LatticeOperator& a) {
    const auto plan = make_embed_plan(a.ctx, a.support, b.support);
    const std::size_t dim = b.dim();
    const bool fermionic = a.ctx->backend() == Backend::Fermion;
    Matrix out = Matrix::Zero(dim, dim);
    for (std::size_t is = 0; is < plan.dim_s; ++is) {
        for (std::size_t js = 0; js < plan.dim_s; ++js) {
            const Complex v = a.block(is, js);
            if (v == Complex(0.0, 0.0)) continue;
            std::uint64_t sign_mask = 0;
            if (fermionic) sign_mask = rest_sign_mask(plan, std::uint64_t(is ^ js));
            for (std::size_t ir = 0; ir < plan.dim_r; ++ir) {
                const double sgn = (std::popcount(std::uint64_t(ir) & sign_mask) % 2) ? -1.0 : 1.0;
                const std::size_t mid = plan.scatter_s[is] + plan.scatter_r[ir];
                const std::size_t col = plan.scatter_s[js] + plan.scatter_r[ir];
                out.col(col) += (sgn * v) * b.block.col(mid);
            }
        }
    }
    return out;
}

}  // namespace

LatticeOperator multiply(const LatticeOperator& a, const LatticeOperator& b) {
    check_same_context(a, b);
    if (a.support == b.support) return {a.ctx, a.support, a.block * b.block};
    if (is_subset(a.support, b.support) && b.dim() >= 4 * a.dim())
        return {a.ctx, b.support, mult_small_left(a, b)};
    if (is_subset(b.support, a.support) && a.dim() >= 4 * b.dim())
        return {a.ctx, a.support, mult_small_right(a, b)};
    const auto u = sorted_union(a.support, b.support);
    const auto ea = embed(a, u);
    const auto eb = embed(b, u);
    return {a.ctx, u, ea.block * eb.block};
}

LatticeOperator commutator(const LatticeOperator& a, const LatticeOperator& b) {
    check_same_context(a, b);
    if (is_subset(a.support, b.support) && b.dim() >= 4 * a.dim())
        return {a.ctx, b.support, (mult_small_left(a, b) - mult_small_right(b, a)).eval()};
    if (is_subset(b.support, a.support) && a.dim() >= 4 * b.dim())
        return {a.ctx, a.support, (mult_small_right(a, b) - mult_small_left(b, a)).eval()};
    const auto u = sorted_union(a.support, b.support);
    const auto ea = embed(a, u);
    const auto eb = embed(b, u);
    return {a.ctx, u, (ea.block * eb.block - eb.block * ea.block).eval()};
}

LatticeOperator anticommutator(const LatticeOperator& a, const LatticeOperator& b) {
    check_same_context(a, b);
    const auto u = sorted_union(a.support, b.support);
    const auto ea = embed(a, u);
    const auto eb = embed(b, u);
    return {a.ctx, u, (ea.block * eb.block + eb.block * ea.block).eval()};
}

// ============================================================================
// Norms and states
// ============================================================================

namespace {

// Power iteration on A*A with a fixed seeded start; tolerance 1e-10 relative,
// at most 1e4 iterations.
double power_iteration_norm(const Matrix& m) {
    const std::size_t dim = std::size_t(m.rows());
    std::mt19937_64 rng(0xc0ffee123457ull ^ (dim * 0x9e3779b97f4a7c15ull));
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (std::size_t i = 0; i < dim; ++i) v(i) = Complex(g(rng), g(rng));
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const Eigen::VectorXcd w = m * v;
        const double est = w.norm();  // = sigma for a converged normalized v
        if (est == 0.0) return 0.0;
        Eigen::VectorXcd u = m.adjoint() * w;
        const double nu = u.norm();
        if (nu == 0.0) return est;
        v = u / nu;
        if (std::abs(est - sigma) <= 1e-10 * std::max(est, 1e-30)) return est;
        sigma = est;
    }
    return sigma;
}

bool is_hermitian_like(const Matrix& m, double* phase_fix) {
    // Detects hermitian (phase 1) and anti-hermitian (phase i) matrices.
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return false;
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        *phase_fix = 0.0;
        return true;
    }
    if ((m + m.adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        *phase_fix = 1.0;
        return true;
    }
    return false;
}

}  // namespace

double op_norm(const Matrix& m) {
    const std::size_t dim = std::size_t(m.rows());
    if (dim == 0) return 0.0;
    if (dim == 1) return std::abs(m(0, 0));
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;

    double phase = 0.0;
    if (dim <= kExactHermitianMax && is_hermitian_like(m, &phase)) {
        const Matrix h = phase == 0.0 ? m : (Complex(0, 1) * m).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    if (dim <= kExactSvdMax) {
        Eigen::BDCSVD<Matrix> svd(m);
        return svd.singularValues()(0);
    }
    return power_iteration_norm(m);
}

double op_norm(const LatticeOperator& a) { return op_norm(a.block); }

Complex tracial_state(const LatticeOperator& a) {
    return a.block.trace() / double(a.dim());
}

double distance(const LatticeOperator& a, const LatticeOperator& b) {
    check_same_context(a, b);
    if (a.support == b.support) return op_norm((a.block - b.block).eval());
    const auto u = sorted_union(a.support, b.support);
    const auto ea = embed(a, u);
    const auto eb = embed(b, u);
    return op_norm((ea.block - eb.block).eval());
}

// ============================================================================
// Conditional expectation
// ============================================================================

namespace {

// Spin backend: normalized partial trace over the sites outside `keep`.
// Equals the Pauli/Weyl-string coefficient projection onto strings in `keep`.
Matrix spin_partial_expectation(const ContextPtr& ctx, const Matrix& block,
                                std::size_t n_sites, const std::vector<std::size_t>& keep_pos) {
    const std::size_t q = ctx->site_dim();
    std::vector<std::size_t> rest_pos;
    for (std::size_t p = 0; p < n_sites; ++p)
        if (!std::binary_search(keep_pos.begin(), keep_pos.end(), p)) rest_pos.push_back(p);

    std::size_t dim_keep = 1;
    for (std::size_t i = 0; i < keep_pos.size(); ++i) dim_keep *= q;
    std::size_t dim_rest = 1;
    for (std::size_t i = 0; i < rest_pos.size(); ++i) dim_rest *= q;

    const auto scatter_k = digit_scatter(q, keep_pos.size(), keep_pos, n_sites);
    const auto scatter_r = digit_scatter(q, rest_pos.size(), rest_pos, n_sites);

    Matrix out = Matrix::Zero(dim_keep, dim_keep);
    for (std::size_t ik = 0; ik < dim_keep; ++ik)
        for (std::size_t jk = 0; jk < dim_keep; ++jk) {
            Complex acc(0.0, 0.0);
            for (std::size_t ir = 0; ir < dim_rest; ++ir)
                acc += block(scatter_k[ik] + scatter_r[ir], scatter_k[jk] + scatter_r[ir]);
            out(ik, jk) = acc / double(dim_rest);
        }
    return out;
}

// Signed-permutation form of a Majorana monomial acting on an occupation-basis
// block: m|j> = phase[j] |perm[j]>.
struct SignedPerm {
    std::vector<std::size_t> perm;
    std::vector<Complex> phase;
};

SignedPerm identity_perm(std::size_t dim) {
    SignedPerm p;
    p.perm.resize(dim);
    p.phase.assign(dim, Complex(1.0, 0.0));
    for (std::size_t j = 0; j < dim; ++j) p.perm[j] = j;
    return p;
}

// Applies gamma_{g} (g = 2*mu for the real quadrature, 2*mu+1 for the
// imaginary one) to the signed permutation from the left.
void apply_majorana(SignedPerm& sp, std::size_t total_modes, std::size_t gamma_index) {
    const std::size_t mu = gamma_index / 2;
    const bool imag_part = gamma_index % 2;
    const std::size_t bit = total_modes - 1 - mu;
    std::uint64_t above_mask = 0;
    for (std::size_t nu = 0; nu < mu; ++nu)
        above_mask |= std::uint64_t(1) << (total_modes - 1 - nu);

    const std::size_t dim = sp.perm.size();
    for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t k = sp.perm[j];
        const bool occupied = (k >> bit) & 1;
        const double string = (std::popcount(std::uint64_t(k) & above_mask) % 2) ? -1.0 : 1.0;
        // gamma_{2mu} = a + a*: flips the bit with the string sign.
        // gamma_{2mu+1} = i(a - a*): extra factor +i when occupied, -i when not.
        Complex factor(string, 0.0);
        if (imag_part) factor *= occupied ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
        sp.perm[j] = k ^ (std::size_t(1) << bit);
        sp.phase[j] *= factor;
    }
}

SignedPerm majorana_monomial(std::size_t total_modes, const std::vector<std::size_t>& gammas) {
    SignedPerm sp = identity_perm(std::size_t(1) << total_modes);
    // product gamma_{g1} ... gamma_{gk} acts on kets rightmost-first
    for (auto it = gammas.rbegin(); it != gammas.rend(); ++it)
        apply_majorana(sp, total_modes, *it);
    return sp;
}

Complex monomial_coefficient(const SignedPerm& sp, const Matrix& block) {
    // omega(m* A) = (1/dim) sum_j conj(phase_j) A(perm_j, j)
    Complex acc(0.0, 0.0);
    const std::size_t dim = sp.perm.size();
    for (std::size_t j = 0; j < dim; ++j) acc += std::conj(sp.phase[j]) * block(sp.perm[j], j);
    return acc / double(dim);
}

void add_monomial(Matrix& block, const SignedPerm& sp, Complex coeff) {
    const std::size_t dim = sp.perm.size();
    for (std::size_t j = 0; j < dim; ++j) block(sp.perm[j], j) += coeff * sp.phase[j];
}

std::vector<std::size_t> gammas_from_mask(std::uint64_t mask) {
    std::vector<std::size_t> gs;
    for (std::size_t g = 0; mask; ++g, mask >>= 1)
        if (mask & 1) gs.push_back(g);
    return gs;
}

// Fermionic conditional expectation: project onto Majorana monomials whose
// modes all belong to the kept sites.
Matrix fermion_monomial_expectation(const ContextPtr& ctx, const Matrix& block,
                                    const std::vector<std::size_t>& support,
                                    const std::vector<std::size_t>& keep_sites) {
    const std::size_t n = std::size_t(ctx->flavors());
    const std::size_t total_modes = support.size() * n;
    std::vector<std::size_t> keep_modes;  // mode indices within the support block
    for (std::size_t p = 0; p < support.size(); ++p)
        if (std::binary_search(keep_sites.begin(), keep_sites.end(), support[p]))
            for (std::size_t f = 0; f < n; ++f) keep_modes.push_back(p * n + f);

    const std::size_t small_modes = keep_modes.size();
    if (2 * small_modes > 24) throw resource_limit_error("fermionic expectation region too large");

    const std::size_t small_dim = std::size_t(1) << small_modes;
    Matrix out = Matrix::Zero(small_dim, small_dim);
    const std::uint64_t n_monomials = std::uint64_t(1) << (2 * small_modes);
    for (std::uint64_t mask = 0; mask < n_monomials; ++mask) {
        // gamma indices within the kept-mode block, mapped into the full block
        const auto small_gammas = gammas_from_mask(mask);
        std::vector<std::size_t> big_gammas;
        big_gammas.reserve(small_gammas.size());
        for (std::size_t g : small_gammas)
            big_gammas.push_back(2 * keep_modes[g / 2] + (g % 2));
        const auto big_perm = majorana_monomial(total_modes, big_gammas);
        const Complex c = monomial_coefficient(big_perm, block);
        if (c == Complex(0.0, 0.0)) continue;
        const auto small_perm = majorana_monomial(small_modes, small_gammas);
        add_monomial(out, small_perm, c);
    }
    return out;
}

}  // namespace

LatticeOperator conditional_expectation(const LatticeOperator& a,
                                        const std::vector<std::size_t>& region) {
    auto m = region;
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    check_support_sites(a.ctx->graph(), m);

    if (is_subset(a.support, m)) return a;  // already supported inside M

    const auto keep = sorted_intersection(a.support, m);
    if (a.ctx->backend() == Backend::Spin) {
        std::vector<std::size_t> keep_pos;
        for (std::size_t p = 0; p < a.support.size(); ++p)
            if (std::binary_search(keep.begin(), keep.end(), a.support[p])) keep_pos.push_back(p);
        return {a.ctx, keep, spin_partial_expectation(a.ctx, a.block, a.support.size(), keep_pos)};
    }
    return {a.ctx, keep, fermion_monomial_expectation(a.ctx, a.block, a.support, keep)};
}

// ============================================================================
// Grading
// ============================================================================

LatticeOperator grading(const LatticeOperator& a, double phi) {
    if (a.ctx->backend() == Backend::Spin) return a;  // vacuous grading on spins
    const std::size_t dim = a.dim();
    Matrix out(dim, dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            const int dn = std::popcount(std::uint64_t(r)) - std::popcount(std::uint64_t(c));
            out(r, c) = a.block(r, c) * std::exp(Complex(0.0, phi * dn));
        }
    return {a.ctx, a.support, std::move(out)};
}

bool is_even(const LatticeOperator& a, double tol) {
    if (tol <= 0) throw std::invalid_argument("tolerance must be positive");
    if (a.ctx->backend() == Backend::Spin) return true;
    const auto flipped = grading(a, M_PI);
    return op_norm((flipped.block - a.block).eval()) <= tol;
}

// ============================================================================
// String expansions
// ============================================================================

namespace {

// Per-site basis element as digit action: |k> -> phase(k) |perm(k)>.
struct SiteAction {
    std::vector<std::size_t> perm;
    std::vector<Complex> phase;
    std::string label;
};

std::vector<SiteAction> site_basis(const ContextPtr& ctx) {
    const std::size_t d = std::size_t(ctx->local_dim());
    std::vector<SiteAction> basis;
    if (d == 2) {
        const char* names = "IXYZ";
        for (int b = 0; b < 4; ++b) {
            SiteAction s;
            s.label = std::string(1, names[b]);
            s.perm = {0, 1};
            s.phase = {Complex(1, 0), Complex(1, 0)};
            switch (b) {
                case 0: break;
                case 1: s.perm = {1, 0}; break;                                   // X
                case 2: s.perm = {1, 0}; s.phase = {Complex(0, 1), Complex(0, -1)}; break;  // Y
                case 3: s.phase = {Complex(1, 0), Complex(-1, 0)}; break;         // Z
            }
            basis.push_back(std::move(s));
        }
        return basis;
    }
    // Weyl basis W(a,b) = X^a Z^b, X|k> = |k+1 mod d>, Z|k> = w^k |k>
    const Complex w = std::exp(Complex(0.0, 2.0 * M_PI / double(d)));
    for (std::size_t aa = 0; aa < d; ++aa)
        for (std::size_t bb = 0; bb < d; ++bb) {
            SiteAction s;
            std::ostringstream os;
            os << aa << "." << bb;
            s.label = os.str();
            s.perm.resize(d);
            s.phase.resize(d);
            for (std::size_t k = 0; k < d; ++k) {
                s.perm[k] = (k + aa) % d;
                s.phase[k] = std::pow(w, double(bb * k));
            }
            basis.push_back(std::move(s));
        }
    return basis;
}

std::string join_labels(const ContextPtr& ctx, const std::vector<std::string>& parts) {
    if (ctx->local_dim() == 2 && ctx->backend() == Backend::Spin) {
        std::string out;
        for (const auto& p : parts) out += p;
        return out;
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i];
    return out;
}

std::vector<std::string> split_labels(const ContextPtr& ctx, const std::string& label,
                                      std::size_t n_sites) {
    std::vector<std::string> parts;
    if (ctx->local_dim() == 2 && ctx->backend() == Backend::Spin) {
        if (label.size() != n_sites) throw std::invalid_argument("bad string label length");
        for (char c : label) parts.emplace_back(1, c);
        return parts;
    }
    std::stringstream ss(label);
    std::string item;
    while (std::getline(ss, item, ';')) parts.push_back(item);
    if (parts.size() != n_sites) throw std::invalid_argument("bad string label length");
    return parts;
}

}  // namespace

StringExpansion expand(const LatticeOperator& a) {
    StringExpansion out;
    const std::size_t dim = a.dim();

    if (a.ctx->backend() == Backend::Fermion) {
        const std::size_t total_modes = a.support.size() * std::size_t(a.ctx->flavors());
        if ((std::uint64_t(1) << (2 * total_modes)) > kMaxExpansionStrings)
            throw resource_limit_error("expansion support too large");
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << (2 * total_modes)); ++mask) {
            const auto gammas = gammas_from_mask(mask);
            const auto sp = majorana_monomial(total_modes, gammas);
            const Complex c = monomial_coefficient(sp, a.block);
            if (std::abs(c) == 0.0) continue;
            std::string label = gammas.empty() ? "I" : "";
            for (std::size_t g : gammas) label += "g" + std::to_string(g);
            out.labels.push_back(std::move(label));
            out.coefficients.push_back(c);
        }
        return out;
    }

    const auto basis = site_basis(a.ctx);
    const std::size_t b = basis.size();
    const std::size_t k_sites = a.support.size();
    double n_strings = std::pow(double(b), double(k_sites));
    if (n_strings > double(kMaxExpansionStrings)) throw resource_limit_error("expansion support too large");

    std::vector<std::size_t> digits(k_sites, 0);
    const std::size_t q = a.ctx->site_dim();
    std::vector<std::size_t> strides(k_sites, 1);
    for (std::size_t p = k_sites; p-- > 1;) strides[p - 1] = strides[p] * q;

    for (std::size_t s = 0; s < std::size_t(n_strings); ++s) {
        // string as product of per-site actions; coefficient = tr(S^dagger A)/dim
        Complex acc(0.0, 0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            std::size_t target = 0;
            Complex phase(1.0, 0.0);
            std::size_t rest = j;
            for (std::size_t p = k_sites; p-- > 0;) {
                const std::size_t kd = rest % q;
                rest /= q;
                const auto& act = basis[digits[p]];
                target += act.perm[kd] * strides[p];
                phase *= act.phase[kd];
            }
            acc += std::conj(phase) * a.block(target, j);
        }
        acc /= double(dim);
        if (std::abs(acc) != 0.0) {
            std::vector<std::string> parts(k_sites);
            for (std::size_t p = 0; p < k_sites; ++p) parts[p] = basis[digits[p]].label;
            out.labels.push_back(join_labels(a.ctx, parts));
            out.coefficients.push_back(acc);
        }
        // odometer
        for (std::size_t p = k_sites; p-- > 0;) {
            if (++digits[p] < b) break;
            digits[p] = 0;
            if (p == 0) break;
        }
        if (k_sites == 0) break;
    }
    if (k_sites == 0) {  // scalar block
        out.labels = {""};
        out.coefficients = {a.block(0, 0)};
    }
    return out;
}

LatticeOperator reconstruct(const ContextPtr& ctx, const std::vector<std::size_t>& support,
                            const StringExpansion& expansion) {
    check_support_sites(ctx->graph(), support);
    if (expansion.labels.size() != expansion.coefficients.size())
        throw std::invalid_argument("expansion label/coefficient count mismatch");
    const std::size_t dim = ctx->block_dim(support.size());
    Matrix block = Matrix::Zero(dim, dim);

    if (support.empty()) {
        if (!expansion.coefficients.empty()) block(0, 0) = expansion.coefficients[0];
        return {ctx, {}, std::move(block)};
    }

    if (ctx->backend() == Backend::Fermion) {
        const std::size_t total_modes = support.size() * std::size_t(ctx->flavors());
        for (std::size_t t = 0; t < expansion.labels.size(); ++t) {
            const std::string& label = expansion.labels[t];
            std::vector<std::size_t> gammas;
            if (label != "I") {
                std::stringstream ss(label);
                char c;
                std::size_t g;
                while (ss >> c >> g) {
                    if (c != 'g' || g >= 2 * total_modes)
                        throw std::invalid_argument("bad majorana label: " + label);
                    gammas.push_back(g);
                }
            }
            add_monomial(block, majorana_monomial(total_modes, gammas), expansion.coefficients[t]);
        }
        return {ctx, support, std::move(block)};
    }

    const auto basis = site_basis(ctx);
    const std::size_t q = ctx->site_dim();
    const std::size_t k_sites = support.size();
    std::vector<std::size_t> strides(k_sites, 1);
    for (std::size_t p = k_sites; p-- > 1;) strides[p - 1] = strides[p] * q;

    for (std::size_t t = 0; t < expansion.labels.size(); ++t) {
        const auto parts = split_labels(ctx, expansion.labels[t], k_sites);
        std::vector<std::size_t> digit(k_sites);
        for (std::size_t p = 0; p < k_sites; ++p) {
            bool found = false;
            for (std::size_t b = 0; b < basis.size(); ++b)
                if (basis[b].label == parts[p]) {
                    digit[p] = b;
                    found = true;
                    break;
                }
            if (!found) throw std::invalid_argument("unknown basis label: " + parts[p]);
        }
        for (std::size_t j = 0; j < dim; ++j) {
            std::size_t target = 0;
            Complex phase(1.0, 0.0);
            std::size_t rest = j;
            for (std::size_t p = k_sites; p-- > 0;) {
                const std::size_t kd = rest % q;
                rest /= q;
                const auto& act = basis[digit[p]];
                target += act.perm[kd] * strides[p];
                phase *= act.phase[kd];
            }
            block(target, j) += expansion.coefficients[t] * phase;
        }
    }
    return {ctx, support, std::move(block)};
}

// ============================================================================
// Serialization
// ============================================================================

std::string to_json_text(const LatticeOperator& a) {
    json j;
    j["backend"] = a.ctx->backend() == Backend::Spin ? "spin" : "fermion";
    if (a.ctx->backend() == Backend::Spin) {
        j["local_dim"] = a.ctx->local_dim();
        j["basis"] = a.ctx->local_dim() == 2 ? "pauli" : "weyl";
    } else {
        j["flavors"] = a.ctx->flavors();
        j["basis"] = "majorana";
    }
    j["support"] = a.support;
    const auto exp = expand(a);
    json terms = json::array();
    for (std::size_t t = 0; t < exp.labels.size(); ++t) {
        terms.push_back({{"s", exp.labels[t]},
                         {"re", exp.coefficients[t].real()},
                         {"im", exp.coefficients[t].imag()}});
    }
    j["terms"] = std::move(terms);
    return j.dump(2);
}

LatticeOperator operator_from_json_text(const ContextPtr& ctx, const std::string& text) {
    const json j = json::parse(text);
    const std::string backend = j.at("backend").get<std::string>();
    if ((backend == "spin") != (ctx->backend() == Backend::Spin))
        throw std::invalid_argument("operator backend does not match context");
    if (ctx->backend() == Backend::Spin && j.value("local_dim", 2) != ctx->local_dim())
        throw std::invalid_argument("operator local dimension does not match context");
    if (ctx->backend() == Backend::Fermion && j.value("flavors", 1) != ctx->flavors())
        throw std::invalid_argument("operator flavor count does not match context");

    const auto support = j.at("support").get<std::vector<std::size_t>>();
    StringExpansion exp;
    for (const auto& t : j.at("terms")) {
        exp.labels.push_back(t.at("s").get<std::string>());
        exp.coefficients.emplace_back(t.at("re").get<double>(), t.at("im").get<double>());
    }
    return reconstruct(ctx, support, exp);
}

}  // namespace lrlab
