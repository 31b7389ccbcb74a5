#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "lrlab/localization.hpp"
#include "lrlab/zero_chain.hpp"

using namespace lrlab;

namespace {

ContextPtr spin_chain(std::size_t n) {
    return AlgebraContext::spin(std::make_shared<MetricGraph>(MetricGraph::chain(n)), 2);
}

}  // namespace

TEST_CASE("uniform tfim terms") {
    auto ctx = spin_chain(5);
    SUBCASE("on-site chain") {
        const auto chain = model_uniform_tfim(ctx, 0.0, 1.0);
        const auto g = DecayFunction::power_law(6.0);
        CHECK(uniform_norm(chain, g, {0.0}) == doctest::Approx(1.0));
    }
    SUBCASE("single bond at L = 2") {
        auto ctx2 = spin_chain(2);
        const auto chain = model_uniform_tfim(ctx2, 1.0, 0.0);
        const auto phi0 = chain.term_at(0, 0.0);
        REQUIRE(phi0.has_value());
        CHECK(op_norm(*phi0) == doctest::Approx(1.0));
        CHECK_FALSE(chain.term_at(1, 0.0).has_value());  // no bond to the right
    }
    SUBCASE("J = h = 1: dense norm oracle gives sqrt(2)") {
        const auto chain = model_uniform_tfim(ctx, 1.0, 1.0);
        const auto phi = chain.term_at(1, 0.0);
        REQUIRE(phi.has_value());
        CHECK(op_norm(*phi) <= 2.0 + 1e-12);
        // (sz sz + sx)^2 = 2 on the two-site block
        const auto sq = multiply(*phi, *phi);
        CHECK(distance(sq, scale(2.0, identity_op(ctx, sq.support))) < 1e-12);
        CHECK(op_norm(*phi) == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("self-adjoint, even, continuous") {
        const auto chain = model_uniform_tfim(ctx, 1.3, -0.7);
        const auto d = check_chain(chain, default_time_samples(0.0, 1.0));
        CHECK(d.self_adjoint);
        CHECK(d.even);
        CHECK(d.continuous);
    }
}

TEST_CASE("linear growth scaling") {
    auto ctx = spin_chain(9);
    const auto base = model_uniform_tfim(ctx, 1.0, 0.0);
    const std::size_t x0 = 4;

    SUBCASE("slope zero is the identity") {
        const auto same = model_linear_growth(base, x0, 0.0);
        for (const auto& [x, ts] : base.terms()) {
            const auto a = same.term_at(x, 0.0);
            const auto b = base.term_at(x, 0.0);
            REQUIRE(a.has_value());
            CHECK(distance(*a, *b) == 0.0);
        }
    }
    SUBCASE("term norms grow like 1 + d(x, x0)") {
        const auto grown = model_linear_growth(base, x0, 1.0);
        for (std::size_t x = 0; x + 1 < 9; ++x) {
            const auto phi = grown.term_at(x, 0.0);
            REQUIRE(phi.has_value());
            const double d = ctx->graph().distance(x, x0);
            CHECK(op_norm(*phi) == doctest::Approx(1.0 + d));
        }
    }
    SUBCASE("growth coefficient with G = power_law(4) is 17") {
        const auto grown = model_linear_growth(base, x0, 1.0);
        const auto profile = growth_coefficient(grown, DecayFunction::power_law(4.0), x0, {0.0});
        // localized-norm argument: bond residual 1 up to radius 1, left limit
        // pairs it with F(1) = 2^-4, so each site contributes (1+d) * 17
        CHECK(profile.c_phi == doctest::Approx(17.0));
        CHECK_FALSE(profile.degenerate);
    }
    SUBCASE("negative slope rejected") {
        CHECK_THROWS_AS(model_linear_growth(base, x0, -0.5), std::invalid_argument);
    }
}

TEST_CASE("uniform norm") {
    auto ctx = spin_chain(6);
    SUBCASE("zero chain") {
        const auto chain = model_zero(ctx);
        CHECK(uniform_norm(chain, DecayFunction::constant(), {0.0}) == 0.0);
        const auto profile = growth_coefficient(chain, DecayFunction::constant(), 3, {0.0});
        CHECK(profile.degenerate);
    }
    SUBCASE("uniform chain: C_phi equals the uniform norm") {
        const auto chain = model_uniform_tfim(ctx, 1.0, 1.0);
        const auto g = DecayFunction::power_law(8.0);
        const double tnorm = uniform_norm(chain, g, {0.0});
        const auto profile = growth_coefficient(chain, g, 3, {0.0});
        CHECK(profile.c_phi == doctest::Approx(tnorm));
    }
    SUBCASE("time-modulated chain peaks at t = 0") {
        const auto chain = model_time_modulated_tfim(ctx, 0.0, 1.0, 1.0);
        const auto samples = default_time_samples(0.0, M_PI);
        const double sup = uniform_norm(chain, DecayFunction::constant(), samples);
        const double at_zero = uniform_norm(chain, DecayFunction::constant(), {0.0});
        CHECK(sup == doctest::Approx(at_zero));
        CHECK(at_zero == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(uniform_norm(model_zero(ctx), DecayFunction::constant(), {}),
                    std::invalid_argument);
}

TEST_CASE("truncation") {
    auto ctx = spin_chain(9);
    const auto chain = model_uniform_tfim(ctx, 1.0, 0.5);
    const std::size_t x0 = 4;

    SUBCASE("range-1 terms inside the ball pass through bitwise") {
        const auto cut = truncate(chain, 4.0, x0);
        for (const auto& [x, ts] : cut.terms()) {
            CHECK(ctx->graph().distance(x, x0) <= 2.0);
            const auto orig = chain.terms().at(x);
            REQUIRE(ts.size() == orig.size());
            for (std::size_t i = 0; i < ts.size(); ++i)
                CHECK(ts[i].op.block == orig[i].op.block);
        }
    }
    SUBCASE("terms outside the membership ball are dropped") {
        const auto cut = truncate(chain, 2.0, x0);
        for (const auto& [x, ts] : cut.terms())
            CHECK(ctx->graph().distance(x, x0) <= 1.0);
    }
    SUBCASE("support containment in B_k(x0), exactly") {
        for (double k : {0.0, 1.0, 3.0, 5.0}) {
            const auto cut = truncate(chain, k, x0);
            for (const auto& [x, ts] : cut.terms())
                for (const auto& term : ts)
                    for (std::size_t s : term.op.support)
                        CHECK(ctx->graph().distance(s, x0) <= k);
        }
    }
    SUBCASE("covering k reproduces the chain") {
        const auto cut = truncate(chain, 16.0, x0);
        CHECK(cut.terms().size() == chain.terms().size());
        for (const auto& [x, ts] : cut.terms())
            for (std::size_t i = 0; i < ts.size(); ++i)
                CHECK(ts[i].op.block == chain.terms().at(x)[i].op.block);
    }
    SUBCASE("uniform-norm bound C_phi (1 + k/2)") {
        const auto g = DecayFunction::power_law(8.0);
        const auto grown = model_linear_growth(chain, x0, 1.0);
        const double c_phi = growth_coefficient(grown, g, x0, {0.0}).c_phi;
        for (double k : {0.0, 2.0, 4.0, 8.0, 16.0}) {
            const auto cut = truncate(grown, k, x0);
            if (cut.empty()) continue;
            CHECK(uniform_norm(cut, g, {0.0}) <= c_phi * (1.0 + k / 2.0) + 1e-9);
        }
    }
}

TEST_CASE("liouvillian") {
    auto ctx = spin_chain(7);
    SUBCASE("identity is annihilated") {
        const auto chain = model_uniform_tfim(ctx, 1.0, 1.0);
        const auto la = liouvillian_apply(chain, 0.0, identity_op(ctx, {2, 3}));
        CHECK(op_norm(la) < 1e-14);
    }
    SUBCASE("dense commutator oracle for the interior field term") {
        // J = 1, h = 0, A = sx_2: L A = [sz_1 sz_2, sx_2] + [sz_2 sz_3, sx_2]
        const auto chain = model_uniform_tfim(ctx, 1.0, 0.0);
        const auto a = pauli(ctx, 2, 'x');
        const auto la = liouvillian_apply(chain, 0.0, a);
        auto manual = add(commutator(multiply(pauli(ctx, 1, 'z'), pauli(ctx, 2, 'z')), a),
                          commutator(multiply(pauli(ctx, 2, 'z'), pauli(ctx, 3, 'z')), a));
        CHECK(distance(la, manual) < 1e-13);
        CHECK(op_norm(la) == doctest::Approx(4.0));
    }
    SUBCASE("zero chain maps to zero") {
        const auto la = liouvillian_apply(model_zero(ctx), 0.0, pauli(ctx, 3, 'y'));
        CHECK(op_norm(la) == 0.0);
    }
    SUBCASE("derivation property: (L A)* = -L(A*)") {
        const auto chain = model_uniform_tfim(ctx, 0.8, 1.2);
        std::mt19937_64 rng(19);
        for (int rep = 0; rep < 6; ++rep) {
            const auto a = random_operator(ctx, {2, 3}, rng);
            const auto left = adjoint(liouvillian_apply(chain, 0.0, a));
            const auto right = scale(-1.0, liouvillian_apply(chain, 0.0, adjoint(a)));
            CHECK(distance(left, right) <= 1e-12 * op_norm(a));
        }
    }
}

TEST_CASE("liouvillian truncation gap") {
    auto ctx = spin_chain(9);
    const auto chain = model_uniform_tfim(ctx, 1.0, 1.0);
    const std::size_t x0 = 4;
    const auto a = pauli(ctx, x0, 'x');
    const std::vector<double> samples{0.0};

    SUBCASE("covering k gives exactly zero") {
        CHECK(liouvillian_truncation_gap(chain, 20.0, a, samples, x0) == 0.0);
    }
    SUBCASE("gap sequence is monotone non-increasing") {
        double prev = 1e300;
        for (double k : {0.0, 2.0, 4.0, 6.0, 20.0}) {
            const double gap = liouvillian_truncation_gap(chain, k, a, samples, x0);
            CHECK(gap <= prev + 1e-15);
            prev = gap;
        }
    }
    SUBCASE("single-site observable at x0: zero once the ball clears its neighborhood") {
        // terms touching site x0 live within distance 1; +2 covers their E-balls
        CHECK(liouvillian_truncation_gap(chain, 4.0, a, samples, x0) == 0.0);
    }
}
