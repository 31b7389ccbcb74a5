#include <cmath>

#include "doctest.h"
#include "lrlab/lab.hpp"
#include "lrlab/localization.hpp"

using namespace lrlab;

namespace {

ContextPtr spin_chain(std::size_t n) {
    return AlgebraContext::spin(std::make_shared<MetricGraph>(MetricGraph::chain(n)), 2);
}

// dense reference for a TFIM-family model
struct DenseRef {
    ContextPtr ctx;
    ZeroChain chain;
    EvolutionSession session;

    DenseRef(const ModelSpec& spec)
        : ctx(spin_chain(spec.length)), chain(spec.build(ctx)), session(chain) {}
};

}  // namespace

TEST_CASE("quadratic norms of single terms") {
    const auto a = quadratic_sigma_x(5, 2);
    CHECK(quadratic_norm(a) == doctest::Approx(1.0));
    // two disjoint sx terms: spectrum adds, norm 2
    auto b = quadratic_sigma_x(5, 0);
    b.form += quadratic_sigma_x(5, 4).form;
    CHECK(quadratic_norm(b) == doctest::Approx(2.0));
}

TEST_CASE("quadratic evolution matches the dense propagator") {
    ModelSpec spec;
    spec.name = "uniform_tfim";
    spec.length = 7;
    spec.J = 1.0;
    spec.h = 0.7;

    DenseRef ref(spec);
    const auto qchain = spec.build_quadratic();
    const QuadraticPropagator prop(qchain);
    const std::size_t x0 = spec.resolved_x0();

    const auto a_dense = pauli(ref.ctx, x0, 'x');
    const auto a_quad = quadratic_sigma_x(spec.length, x0);

    for (double t : {0.3, 0.9}) {
        const auto dense = ref.session.evolve(0.0, t, a_dense);
        const auto quad = prop.evolve(0.0, t, a_quad);
        CHECK(op_norm(dense) == doctest::Approx(quadratic_norm(quad)).epsilon(1e-10));

        // ball residuals agree radius by radius
        for (double r = 0.0; r <= 3.0; r += 1.0) {
            const auto projected = conditional_expectation(dense, ref.ctx->graph().ball(x0, r));
            const double dres = distance(dense, projected);
            const double qres = quadratic_ball_residual(quad, x0, r, spec.length);
            CHECK(dres == doctest::Approx(qres).epsilon(1e-8));
        }

        // localized norms agree
        const auto f = DecayFunction::power_law(3.0);
        CHECK(localized_norm(dense, f, x0) ==
              doctest::Approx(quadratic_localized_norm(quad, f, x0, spec.length)).epsilon(1e-8));
    }
}

TEST_CASE("quadratic evolution matches dense on growing couplings") {
    ModelSpec spec;
    spec.name = "linear_growth_tfim";
    spec.length = 7;
    spec.J = 1.0;
    spec.h = 1.0;
    spec.slope = 0.5;

    DenseRef ref(spec);
    const QuadraticPropagator prop(spec.build_quadratic());
    const std::size_t x0 = spec.resolved_x0();

    const auto dense = ref.session.evolve(0.0, 0.4, pauli(ref.ctx, x0, 'x'));
    const auto quad = prop.evolve(0.0, 0.4, quadratic_sigma_x(spec.length, x0));
    CHECK(op_norm(dense) == doctest::Approx(quadratic_norm(quad)).epsilon(1e-10));
    const double dres = distance(
        dense, conditional_expectation(dense, ref.ctx->graph().ball(x0, 2.0)));
    CHECK(dres == doctest::Approx(quadratic_ball_residual(quad, x0, 2.0, spec.length)).epsilon(1e-8));
}

TEST_CASE("quadratic commutator norm matches dense") {
    ModelSpec spec;
    spec.name = "uniform_tfim";
    spec.length = 7;

    DenseRef ref(spec);
    const QuadraticPropagator prop(spec.build_quadratic());

    const auto dense = ref.session.evolve(0.0, 0.8, pauli(ref.ctx, 3, 'x'));
    const auto quad = prop.evolve(0.0, 0.8, quadratic_sigma_x(7, 3));
    for (std::size_t y : {std::size_t(1), std::size_t(5)}) {
        const double d = op_norm(commutator(dense, pauli(ref.ctx, y, 'x')));
        const double q = quadratic_commutator_norm(quad, quadratic_sigma_x(7, y));
        CHECK(d == doctest::Approx(q).epsilon(1e-8));
    }
}

TEST_CASE("quadratic truncation mirrors the zero-chain truncation") {
    ModelSpec spec;
    spec.name = "linear_growth_tfim";
    spec.length = 9;
    spec.slope = 1.0;

    auto ctx = spin_chain(spec.length);
    const auto chain = spec.build(ctx);
    const std::size_t x0 = spec.resolved_x0();
    const auto qfull = spec.build_quadratic();

    for (double k : {2.0, 4.0, 6.0}) {
        const auto dense_cut = truncate(chain, k, x0);
        EvolutionSession session(dense_cut);
        const auto dense = session.evolve(0.0, 0.35, pauli(ctx, x0, 'x'));
        const auto quad = QuadraticPropagator(qfull.truncated(k))
                              .evolve(0.0, 0.35, quadratic_sigma_x(spec.length, x0));
        CHECK(op_norm(dense) == doctest::Approx(quadratic_norm(quad)).epsilon(1e-9));
        const double dres =
            distance(dense, conditional_expectation(dense, ctx->graph().ball(x0, 1.0)));
        CHECK(dres ==
              doctest::Approx(quadratic_ball_residual(quad, x0, 1.0, spec.length)).epsilon(1e-8));
    }

    SUBCASE("cauchy differences agree between engines") {
        EvolutionSession full_session(chain);
        const auto a = pauli(ctx, x0, 'x');
        const auto full_dense = full_session.evolve(0.0, 0.3, a);
        const auto full_quad =
            QuadraticPropagator(qfull).evolve(0.0, 0.3, quadratic_sigma_x(spec.length, x0));
        for (double k : {2.0, 4.0}) {
            const auto cut = truncate(chain, k, x0);
            EvolutionSession cut_session(cut);
            const double dense_diff = distance(full_dense, cut_session.evolve(0.0, 0.3, a));
            const auto cut_quad = QuadraticPropagator(qfull.truncated(k))
                                      .evolve(0.0, 0.3, quadratic_sigma_x(spec.length, x0));
            const double quad_diff = quadratic_norm({full_quad.form - cut_quad.form});
            CHECK(dense_diff == doctest::Approx(quad_diff).epsilon(1e-8));
        }
    }
}

TEST_CASE("covering truncation is bitwise exact") {
    ModelSpec spec;
    spec.name = "uniform_tfim";
    spec.length = 9;
    const auto qfull = spec.build_quadratic();
    const auto qcut = qfull.truncated(2.0 * spec.length);
    CHECK((qfull.hamiltonian_form() - qcut.hamiltonian_form()).cwiseAbs().maxCoeff() == 0.0);

    const auto a = quadratic_sigma_x(spec.length, 4);
    const auto e1 = QuadraticPropagator(qfull).evolve(0.0, 0.5, a);
    const auto e2 = QuadraticPropagator(qcut).evolve(0.0, 0.5, a);
    CHECK((e1.form - e2.form).cwiseAbs().maxCoeff() == 0.0);
}
