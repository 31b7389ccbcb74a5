#include <cmath>

#include "doctest.h"
#include "lrlab/lab.hpp"

using namespace lrlab;

TEST_CASE("linear fit") {
    const std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v - 1.0);
    const auto fit = linear_fit(x, y);
    CHECK(fit.valid);
    CHECK(fit.slope == doctest::Approx(2.5));
    CHECK(fit.intercept == doctest::Approx(-1.0));
    CHECK(fit.residual_rms < 1e-12);

    const auto few = linear_fit({0, 1, 2}, {0, 1, 2});
    CHECK_FALSE(few.valid);
}

TEST_CASE("growth model comparison") {
    std::vector<double> t, lin, expo;
    for (int i = 0; i <= 10; ++i) {
        t.push_back(0.2 * i);
        lin.push_back(1.7 * 0.2 * i + 0.3);
        expo.push_back(std::exp(1.1 * 0.2 * i) - 1.0);
    }
    const auto on_linear = compare_growth_models(t, lin);
    CHECK(on_linear.linear_rms_r < on_linear.exponential_rms_r);
    const auto on_exp = compare_growth_models(t, expo);
    CHECK(on_exp.exponential_rms_r < on_exp.linear_rms_r);
}

TEST_CASE("affine envelope") {
    const std::vector<double> t{0, 1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : t) y.push_back(0.8 * v + 2.0);
    const auto env = affine_envelope(t, y);
    CHECK(env.shift == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(env.residual_rel < 1e-10);

    // envelope dominates wavy data
    std::vector<double> wavy;
    for (double v : t) wavy.push_back(0.8 * v + 0.3 * std::sin(3.0 * v));
    const auto env2 = affine_envelope(t, wavy);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(env2.base.intercept + env2.shift + env2.base.slope * t[i] >= wavy[i] - 1e-12);
}

TEST_CASE("tau and mu") {
    CHECK(tau_of(1.0, 0.25) == doctest::Approx(1.0));
    CHECK(tau_of(1.0, 1.0) == doctest::Approx(0.25));
    CHECK(tau_of(2.0, 0.5) == doctest::Approx(0.25));
    CHECK_THROWS_AS(tau_of(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(tau_of(1.0, -1.0), std::invalid_argument);

    CHECK(mu_of(DecayFunction::power_law(8.0), DecayFunction::power_law(8.0), 1) ==
          doctest::Approx(4.0));
    CHECK(mu_of(DecayFunction::exponential(1.0), DecayFunction::power_law(6.0), 1) ==
          doctest::Approx(3.0));
}

TEST_CASE("cone scan basics") {
    ExperimentConfig cfg;
    cfg.model.name = "uniform_tfim";
    cfg.model.length = 6;
    cfg.t_grid = linspace(0.0, 0.6, 7);
    cfg.threads = 2;

    SUBCASE("t = s row vanishes exactly for disjoint probes") {
        const auto res = cone_scan(cfg);
        CHECK(res.engine == "dense");
        for (double v : res.table[0]) CHECK(v == 0.0);
        CHECK(res.threshold_radius[0] == 0.0);
    }
    SUBCASE("zero model gives an all-zero table") {
        cfg.model.name = "zero";
        const auto res = cone_scan(cfg);
        for (const auto& row : res.table)
            for (double v : row) CHECK(v == 0.0);
    }
    SUBCASE("quadratic engine agrees with dense") {
        auto qcfg = cfg;
        qcfg.engine = EngineKind::Quadratic;
        const auto qres = cone_scan(qcfg);
        const auto dres = cone_scan(cfg);
        REQUIRE(qres.table.size() == dres.table.size());
        for (std::size_t it = 0; it < qres.table.size(); ++it)
            for (std::size_t id = 0; id < qres.table[it].size(); ++id)
                CHECK(qres.table[it][id] == doctest::Approx(dres.table[it][id]).epsilon(1e-7));
    }
}

TEST_CASE("cone scan small-time nested-commutator series oracle") {
    // commutator entries at small t follow the truncated series
    // sum_m (it)^m/m! [ad_H^m(A), B] up to order r+2
    ExperimentConfig cfg;
    cfg.model.name = "uniform_tfim";
    cfg.model.length = 7;
    cfg.t_grid = {0.05, 0.1};
    const auto res = cone_scan(cfg);

    auto graph = std::make_shared<MetricGraph>(MetricGraph::chain(cfg.model.length));
    auto ctx = AlgebraContext::spin(graph, 2);
    const auto chain = cfg.model.build(ctx);
    const std::size_t x0 = cfg.model.resolved_x0();

    // dense H on the full chain
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < cfg.model.length; ++i) all.push_back(i);
    auto h = identity_op(ctx, all);
    h.block.setZero();
    for (const auto& [x, ts] : chain.terms())
        for (const auto& term : ts) h.block += embed(term.op, all).block;

    for (std::size_t it = 0; it < res.t_grid.size(); ++it) {
        const double t = res.t_grid[it];
        for (std::size_t id = 0; id < res.distances.size(); ++id) {
            const double r = res.distances[id];
            if (r > 3.0) continue;
            // series for alpha_t(A) truncated at order r+2
            const auto a = embed(pauli(ctx, x0, 'x'), all);
            Matrix ad = a.block;
            Matrix series = a.block;
            Complex factor(1.0, 0.0);
            const int order = int(r) + 2;
            for (int m = 1; m <= order; ++m) {
                ad = (h.block * ad - ad * h.block).eval();
                factor *= Complex(0.0, t) / double(m);
                series += factor * ad;
            }
            double best = 0.0;
            for (std::size_t y = 0; y < cfg.model.length; ++y) {
                if (graph->distance(x0, y) != r) continue;
                const auto b = embed(pauli(ctx, y, 'x'), all);
                best = std::max(best, op_norm((series * b.block - b.block * series).eval()));
            }
            if (best < 1e-12) continue;  // below resolution at this order
            CHECK(std::abs(res.table[it][id] - best) <= 0.2 * best);
        }
    }
}

TEST_CASE("cauchy scan") {
    ExperimentConfig cfg;
    cfg.model.name = "linear_growth_tfim";
    cfg.model.length = 9;
    cfg.model.slope = 1.0;
    cfg.F = DecayFunction::power_law(8.0);
    cfg.G = DecayFunction::power_law(8.0);
    cfg.nu = 1.0;
    cfg.c_lr = 0.002;  // generous tau for the unit test
    cfg.k_list = {2.0, 4.0, 20.0};
    cfg.t = 0.25;

    SUBCASE("covering k is excluded with an exact zero") {
        const auto res = cauchy_scan(cfg);
        CHECK(res.excluded_k == std::vector<double>{20.0});
        CHECK(res.k_list == std::vector<double>{2.0, 4.0});
        CHECK(res.monotone);
        CHECK(res.differences[0] > res.differences[1]);
    }
    SUBCASE("short-time window enforced") {
        cfg.c_lr = 100.0;  // tau shrinks below the requested t
        CHECK_THROWS_AS(cauchy_scan(cfg), std::invalid_argument);
    }
    SUBCASE("nu outside (0, mu) rejected") {
        cfg.nu = 10.0;
        CHECK_THROWS_AS(cauchy_scan(cfg), std::invalid_argument);
    }
    SUBCASE("missing c_lr rejected") {
        cfg.c_lr.reset();
        CHECK_THROWS_AS(cauchy_scan(cfg), std::invalid_argument);
    }
    SUBCASE("l_ref below the k list rejected") {
        cfg.l_ref = 1.0;
        CHECK_THROWS_AS(cauchy_scan(cfg), std::invalid_argument);
    }
}

TEST_CASE("growth scan") {
    ExperimentConfig cfg;
    cfg.model.name = "uniform_tfim";
    cfg.model.length = 7;
    cfg.F = DecayFunction::power_law(8.0);
    cfg.G = DecayFunction::power_law(8.0);
    cfg.nu = 1.0;
    cfg.t_grid = linspace(0.0, 0.4, 9);

    SUBCASE("anchor at t = s") {
        const auto res = nu_norm_growth_scan(cfg);
        CHECK(res.anchor_ok);
        CHECK(res.nu_norms.front() == doctest::Approx(res.a_nu_norm));
    }
    SUBCASE("zero chain keeps the norm flat") {
        cfg.model.name = "zero";
        const auto res = nu_norm_growth_scan(cfg);
        for (double n : res.nu_norms) CHECK(n == doctest::Approx(res.a_nu_norm));
    }
}

TEST_CASE("support radius scan") {
    ExperimentConfig cfg;
    cfg.model.name = "uniform_tfim";
    cfg.model.length = 7;
    cfg.t_grid = linspace(0.0, 0.5, 6);

    SUBCASE("t = s starts at radius zero") {
        const auto res = support_radius_scan(cfg);
        CHECK(res.radii.front() == 0.0);
    }
    SUBCASE("zero model stays at radius zero") {
        cfg.model.name = "zero";
        const auto res = support_radius_scan(cfg);
        for (double r : res.radii) CHECK(r == 0.0);
        CHECK_FALSE(res.ratio_increasing);
    }
    SUBCASE("delta >= 1 is degenerate") {
        cfg.delta = 1.5;
        const auto res = support_radius_scan(cfg);
        CHECK(res.degenerate);
        for (double r : res.radii) CHECK(r == 0.0);
    }
    SUBCASE("radius is monotone in delta") {
        cfg.model.length = 41;
        cfg.engine = EngineKind::Quadratic;
        cfg.t_grid = linspace(0.0, 1.2, 7);
        auto tight = cfg;
        tight.delta = 1e-4;
        const auto loose_res = support_radius_scan(cfg);
        const auto tight_res = support_radius_scan(tight);
        for (std::size_t i = 0; i < loose_res.radii.size(); ++i)
            CHECK(tight_res.radii[i] >= loose_res.radii[i]);
    }
}

TEST_CASE("largest feasible truncation") {
    ExperimentConfig cfg;
    cfg.model.name = "time_modulated_tfim";  // no quadratic escape hatch
    cfg.model.length = 33;
    cfg.dense_dim_cap = 4096;
    const double k = largest_feasible_k(cfg, {4.0, 8.0, 12.0, 16.0, 64.0});
    // k = 16 needs sites within distance 9 of the center: 19 sites > 12-site cap
    CHECK(k == 8.0);

    cfg.model.name = "uniform_tfim";  // quadratic-eligible: full chain feasible
    CHECK(largest_feasible_k(cfg, {4.0, 8.0}) == -1.0);
}
