#include "lrlab/zero_chain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lrlab/localization.hpp"

namespace lrlab {

ZeroChain::ZeroChain(ContextPtr ctx, double t_min, double t_max)
    : ctx_(std::move(ctx)), t_min_(t_min), t_max_(t_max) {
    if (!ctx_) throw std::invalid_argument("null context");
    if (!(t_min_ < t_max_)) throw std::invalid_argument("empty time interval");
}

void ZeroChain::add_term(std::size_t site, LatticeOperator op, CoeffFn coeff) {
    if (op.ctx != ctx_) throw std::invalid_argument("term context mismatch");
    if (site >= ctx_->graph().size()) throw std::invalid_argument("unknown site");
    terms_[site].push_back({std::move(op), coeff});
}

bool ZeroChain::is_static() const {
    for (const auto& [x, ts] : terms_)
        for (const auto& t : ts)
            if (!t.coeff.is_constant()) return false;
    return true;
}

std::optional<LatticeOperator> ZeroChain::term_at(std::size_t site, double t) const {
    const auto it = terms_.find(site);
    if (it == terms_.end() || it->second.empty()) return std::nullopt;
    const auto& pieces = it->second;
    if (pieces.size() == 1 && pieces[0].coeff.is_constant() && pieces[0].coeff.value == 1.0)
        return pieces[0].op;  // bitwise pass-through for plain static terms
    LatticeOperator acc = scale(pieces[0].coeff(t), pieces[0].op);
    for (std::size_t i = 1; i < pieces.size(); ++i)
        acc = add(acc, scale(pieces[i].coeff(t), pieces[i].op));
    return acc;
}

std::vector<std::size_t> ZeroChain::footprint() const {
    std::set<std::size_t> sites;
    for (const auto& [x, ts] : terms_)
        for (const auto& term : ts) sites.insert(term.op.support.begin(), term.op.support.end());
    return {sites.begin(), sites.end()};
}

// ============================================================================
// Model zoo
// ============================================================================

ZeroChain model_uniform_tfim(const ContextPtr& ctx, double J, double h) {
    if (ctx->backend() != Backend::Spin || ctx->local_dim() != 2)
        throw std::invalid_argument("tfim models require the spin-1/2 backend");
    const std::size_t L = ctx->graph().size();
    ZeroChain chain(ctx);
    for (std::size_t x = 0; x < L; ++x) {
        LatticeOperator phi = scale(h, pauli(ctx, x, 'x'));
        if (x + 1 < L && ctx->graph().distance(x, x + 1) == 1.0) {
            const auto bond = multiply(pauli(ctx, x, 'z'), pauli(ctx, x + 1, 'z'));
            phi = add(phi, scale(J, bond));
        }
        chain.add_term(x, std::move(phi));
    }
    return chain;
}

ZeroChain model_linear_growth(const ZeroChain& base, std::size_t x0, double slope) {
    if (slope < 0) throw std::invalid_argument("growth slope must be nonnegative");
    const auto& g = base.context()->graph();
    if (x0 >= g.size()) throw std::invalid_argument("unknown center site");
    ZeroChain out(base.context(), base.t_min(), base.t_max());
    for (const auto& [x, ts] : base.terms()) {
        const double factor = 1.0 + slope * g.distance(x, x0);
        for (const auto& term : ts) {
            if (factor == 1.0) {
                out.add_term(x, term.op, term.coeff);
            } else {
                out.add_term(x, scale(factor, term.op), term.coeff);
            }
        }
    }
    return out;
}

ZeroChain model_time_modulated_tfim(const ContextPtr& ctx, double J, double h, double omega) {
    auto base = model_uniform_tfim(ctx, J, h);
    ZeroChain out(ctx, base.t_min(), base.t_max());
    for (const auto& [x, ts] : base.terms())
        for (const auto& term : ts) out.add_term(x, term.op, CoeffFn::cosine(1.0, omega));
    return out;
}

ZeroChain model_zero(const ContextPtr& ctx) { return ZeroChain(ctx); }

// ============================================================================
// Operations
// ============================================================================

std::vector<double> default_time_samples(double t_min, double t_max) {
    const double span = t_max - t_min;
    const std::size_t n = std::max<std::size_t>(2, std::size_t(std::ceil(span * 64.0)) + 1);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = t_min + span * double(i) / double(n - 1);
    out.front() = t_min;
    out.back() = t_max;
    return out;
}

ChainDiagnostics check_chain(const ZeroChain& chain, const std::vector<double>& t_samples,
                             double tol) {
    ChainDiagnostics d;
    for (const auto& [x, ts] : chain.terms()) {
        for (const auto& term : ts) {
            double coeff_peak = 0.0;
            for (double t : t_samples) coeff_peak = std::max(coeff_peak, std::abs(term.coeff(t)));
            const double defect =
                coeff_peak * op_norm((term.op.block - term.op.block.adjoint()).eval());
            d.max_self_adjoint_defect = std::max(d.max_self_adjoint_defect, defect);
            if (defect > tol) d.self_adjoint = false;
            if (!is_even(term.op, std::max(tol, 1e-12))) d.even = false;
        }
    }
    // sampled continuity of the coefficient functions
    if (t_samples.size() >= 3) {
        for (const auto& [x, ts] : chain.terms()) {
            for (const auto& term : ts) {
                double max_jump = 0.0, range = 0.0, lo = 1e300, hi = -1e300;
                for (std::size_t i = 0; i < t_samples.size(); ++i) {
                    const double v = term.coeff(t_samples[i]);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                    if (i) max_jump = std::max(max_jump, std::abs(v - term.coeff(t_samples[i - 1])));
                }
                range = hi - lo;
                if (range > 0 && max_jump > 10.0 * range / double(t_samples.size() - 1) + 1e-12)
                    d.continuous = false;
            }
        }
    }
    return d;
}

double uniform_norm(const ZeroChain& chain, const DecayFunction& G,
                    const std::vector<double>& t_samples) {
    if (t_samples.empty()) throw std::invalid_argument("empty time samples");
    for (double t : t_samples)
        if (!chain.contains_time(t)) throw std::invalid_argument("sample outside the chain interval");

    double sup = 0.0;
    for (const auto& [x, ts] : chain.terms()) {
        bool site_static = true;
        for (const auto& term : ts)
            if (!term.coeff.is_constant()) site_static = false;
        if (site_static) {
            const auto phi = chain.term_at(x, t_samples.front());
            if (phi) sup = std::max(sup, localized_norm(*phi, G, x));
            continue;
        }
        for (double t : t_samples) {
            const auto phi = chain.term_at(x, t);
            if (phi) sup = std::max(sup, localized_norm(*phi, G, x));
        }
    }
    return sup;
}

GrowthProfile growth_coefficient(const ZeroChain& chain, const DecayFunction& G, std::size_t x0,
                                 const std::vector<double>& t_samples) {
    if (t_samples.empty()) throw std::invalid_argument("empty time samples");
    const auto& g = chain.context()->graph();
    if (x0 >= g.size()) throw std::invalid_argument("unknown center site");

    GrowthProfile profile;
    profile.x0 = x0;
    for (const auto& [x, ts] : chain.terms()) {
        bool site_static = true;
        for (const auto& term : ts)
            if (!term.coeff.is_constant()) site_static = false;
        const double weight = 1.0 + g.distance(x, x0);
        if (site_static) {
            const auto phi = chain.term_at(x, t_samples.front());
            if (phi) profile.c_phi = std::max(profile.c_phi, localized_norm(*phi, G, x) / weight);
            continue;
        }
        for (double t : t_samples) {
            const auto phi = chain.term_at(x, t);
            if (phi) profile.c_phi = std::max(profile.c_phi, localized_norm(*phi, G, x) / weight);
        }
    }
    profile.degenerate = profile.c_phi == 0.0;
    return profile;
}

ZeroChain truncate(const ZeroChain& chain, double k, std::size_t x0) {
    if (k < 0) throw std::invalid_argument("truncation radius must be nonnegative");
    const auto& g = chain.context()->graph();
    if (x0 >= g.size()) throw std::invalid_argument("unknown center site");

    ZeroChain out(chain.context(), chain.t_min(), chain.t_max());
    for (const auto& [x, ts] : chain.terms()) {
        if (g.distance(x, x0) > k / 2.0) continue;
        const auto ball = g.ball(x, k / 2.0);
        for (const auto& term : ts) {
            auto projected = conditional_expectation(term.op, ball);
            if (projected.block.cwiseAbs().maxCoeff() == 0.0) continue;  // term fully cut
            out.add_term(x, std::move(projected), term.coeff);
        }
    }
    return out;
}

namespace {

bool supports_intersect(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        if (*ia < *ib) ++ia; else ++ib;
    }
    return false;
}

}  // namespace

LatticeOperator liouvillian_apply(const ZeroChain& chain, double t, const LatticeOperator& a) {
    if (!chain.contains_time(t)) throw std::invalid_argument("time outside the chain interval");

    // region = supp(A) plus supports of the terms that can touch it
    std::set<std::size_t> region_set(a.support.begin(), a.support.end());
    std::vector<std::size_t> contributing;
    for (const auto& [x, ts] : chain.terms()) {
        bool touches = false;
        for (const auto& term : ts)
            if (supports_intersect(term.op.support, a.support)) touches = true;
        if (!touches) continue;  // even terms commute with disjoint-support operators
        contributing.push_back(x);
        for (const auto& term : ts) region_set.insert(term.op.support.begin(), term.op.support.end());
    }
    const std::vector<std::size_t> region(region_set.begin(), region_set.end());
    auto acc = identity_op(a.ctx, region);
    acc.block.setZero();
    if (contributing.empty()) return acc;

    const auto a_region = embed(a, region);
    for (std::size_t x : contributing) {
        const auto phi = chain.term_at(x, t);
        if (!phi) continue;
        const auto c = commutator(*phi, a_region);
        acc.block += embed(c, region).block;
    }
    return acc;
}

double liouvillian_truncation_gap(const ZeroChain& chain, double k, const LatticeOperator& a,
                                  const std::vector<double>& t_samples, std::size_t x0) {
    if (t_samples.empty()) throw std::invalid_argument("empty time samples");
    const auto truncated = truncate(chain, k, x0);
    double gap = 0.0;
    for (double t : t_samples) {
        const auto full = liouvillian_apply(chain, t, a);
        const auto cut = liouvillian_apply(truncated, t, a);
        gap = std::max(gap, distance(full, cut));
    }
    return gap;
}

}  // namespace lrlab
