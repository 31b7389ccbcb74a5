#include <random>

#include "doctest.h"
#include "lrlab/localization.hpp"

using namespace lrlab;

namespace {

ContextPtr spin_chain(std::size_t n) {
    return AlgebraContext::spin(std::make_shared<MetricGraph>(MetricGraph::chain(n)), 2);
}

}  // namespace

TEST_CASE("tail supremum with left limits") {
    const auto f = DecayFunction::power_law(2.0);
    // residual 1 on [0, 3), 0 beyond: sup = 1/F(3) = 16 via the left limit
    CHECK(tail_supremum({0.0, 3.0}, {1.0, 0.0}, f) == doctest::Approx(16.0));
    // constant F: sup is just the largest residual
    CHECK(tail_supremum({0.0, 2.0, 5.0}, {0.4, 0.7, 0.0}, DecayFunction::constant()) ==
          doctest::Approx(0.7));
    CHECK_THROWS_AS(tail_supremum({0.0}, {1.0, 2.0}, f), std::invalid_argument);
}

TEST_CASE("localized norm") {
    auto ctx = spin_chain(7);
    SUBCASE("operator at the center has no tail") {
        const auto a = pauli(ctx, 3, 'z');
        CHECK(localized_norm(a, DecayFunction::constant(), 3) == doctest::Approx(1.0));
        CHECK(localized_norm(a, DecayFunction::power_law(8.0), 3) == doctest::Approx(1.0));
    }
    SUBCASE("single-site operator three sites away: 1 + 16") {
        const auto a = pauli(ctx, 6, 'z');
        const double norm = localized_norm(a, DecayFunction::power_law(2.0), 3);
        CHECK(norm == doctest::Approx(17.0));
    }
    SUBCASE("F = 1 bound: ||A||_{0,x} <= 3 ||A||") {
        std::mt19937_64 rng(5);
        for (int rep = 0; rep < 8; ++rep) {
            const auto a = random_operator(ctx, {1, 2, 4}, rng);
            const double norm = localized_norm(a, DecayFunction::constant(), 0);
            CHECK(norm >= op_norm(a));
            CHECK(norm <= 3.0 * op_norm(a) + 1e-12);
        }
    }
    SUBCASE("residual vanishes once the ball covers the support") {
        std::mt19937_64 rng(9);
        const auto a = random_operator(ctx, {2, 3}, rng);
        for (double r = 3.0; r <= 6.0; r += 1.0) {
            const auto e = conditional_expectation(a, ctx->graph().ball(0, r));
            CHECK(distance(a, e) < 1e-14);
        }
    }
    SUBCASE("declared-support padding does not change the norm") {
        const auto a = pauli(ctx, 2, 'x');
        const auto padded = embed(a, {2, 3, 4});
        const auto f = DecayFunction::power_law(3.0);
        CHECK(localized_norm(padded, f, 2) == doctest::Approx(localized_norm(a, f, 2)));
    }
    SUBCASE("monotone refinement: extra radii never change the monotone-F value") {
        // piecewise-constant residual means the cut radii already realize the sup
        const auto a = pauli(ctx, 5, 'y');
        const auto f = DecayFunction::power_law(2.5);
        const double direct = localized_norm(a, f, 1);
        // manual refinement over every realized radius
        std::vector<double> radii, residuals;
        for (double r : ctx->graph().realized_radii(1)) {
            radii.push_back(r);
            const auto e = conditional_expectation(a, ctx->graph().ball(1, r));
            residuals.push_back(distance(a, e));
        }
        CHECK(op_norm(a) + tail_supremum(radii, residuals, f) == doctest::Approx(direct));
    }
}
