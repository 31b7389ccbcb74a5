#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "lrlab/lattice.hpp"

using namespace lrlab;

namespace {

// zeta(3) to ~1e-18 via truncated sum plus midpoint tail estimate
double zeta3_oracle() {
    double acc = 0.0;
    const std::size_t cut = 2000000;
    for (std::size_t k = cut; k >= 1; --k) acc += 1.0 / (double(k) * double(k) * double(k));
    acc += 1.0 / (2.0 * double(cut) * double(cut));
    return acc;
}

}  // namespace

TEST_CASE("chain basics") {
    const auto g1 = MetricGraph::chain(1);
    CHECK(g1.size() == 1);
    CHECK(g1.distance(0, 0) == 0.0);

    const auto g = MetricGraph::chain(5);
    CHECK(g.distance(0, 4) == 4.0);
    CHECK(g.dimension() == 1);
    CHECK(g.center() == 2);
    CHECK(g.is_path_graph());

    // triangle inequality on all triples of a small chain
    const auto g3 = MetricGraph::chain(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(g3.distance(i, j) <= g3.distance(i, k) + g3.distance(k, j));

    CHECK_THROWS_AS(MetricGraph::chain(0), std::invalid_argument);
    CHECK_THROWS_AS(MetricGraph::chain(100, 50), resource_limit_error);
}

TEST_CASE("grids") {
    const auto g = MetricGraph::grid(3, 2);
    CHECK(g.size() == 9);
    CHECK(g.distance(0, 8) == 4.0);  // (0,0) to (2,2), l1
    CHECK_FALSE(g.is_path_graph());

    const auto gl = MetricGraph::grid(5, 1);
    const auto gc = MetricGraph::chain(5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(gl.distance(i, j) == gc.distance(i, j));

    // exhaustive ball enumeration oracle on the 2x2 grid
    const auto g2 = MetricGraph::grid(2, 2);
    const std::vector<std::pair<int, int>> coords{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const auto center = g2.center();
    std::size_t expected = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const int d = std::abs(coords[i].first - coords[center].first) +
                      std::abs(coords[i].second - coords[center].second);
        if (d <= 1) ++expected;
    }
    CHECK(g2.ball(center, 1.0).size() == expected);

    CHECK_THROWS_AS(MetricGraph::grid(3, 3), std::invalid_argument);
    CHECK_THROWS_AS(MetricGraph::grid(100, 2, 4096), resource_limit_error);
}

TEST_CASE("balls") {
    const auto g = MetricGraph::chain(5);
    CHECK(g.ball(2, 1.0) == std::vector<std::size_t>{1, 2, 3});
    CHECK(g.ball(3, 0.0) == std::vector<std::size_t>{3});
    CHECK(g.ball(2, 100.0).size() == 5);
    CHECK_THROWS_AS(g.ball(7, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(g.ball(1, -1.0), std::invalid_argument);

    SUBCASE("ball monotonicity") {
        for (std::size_t x = 0; x < 5; ++x) {
            for (double r1 = 0; r1 <= 4; r1 += 0.5) {
                const auto small = g.ball(x, r1);
                const auto big = g.ball(x, r1 + 1.0);
                for (std::size_t s : small)
                    CHECK(std::find(big.begin(), big.end(), s) != big.end());
            }
        }
    }
}

TEST_CASE("regularity constant") {
    SUBCASE("single site") {
        const auto g = MetricGraph::chain(1);
        const auto rep = regularity_constant(g, 3, 1.0);
        CHECK(rep.c_vol == doctest::Approx(1.0));
    }
    SUBCASE("long chain approaches 2") {
        const auto g = MetricGraph::chain(101);
        const auto rep = regularity_constant(g, 1, 100.0);
        // independent oracle: path-graph ball sizes in closed form
        double expected = 0.0;
        for (long x = 0; x < 101; ++x)
            for (long r = 0; r <= 100; ++r) {
                const double count = double(std::min<long>(100, x + r) - std::max<long>(0, x - r) + 1);
                expected = std::max(expected, count / double(1 + r));
            }
        CHECK(rep.c_vol == doctest::Approx(expected));
        CHECK(rep.c_vol > 1.9);
        CHECK(rep.c_vol < 2.0);
        CHECK_FALSE(rep.dimension_understated);
    }
    SUBCASE("2d grid stays below 2") {
        const auto g = MetricGraph::grid(11, 2);
        const auto rep = regularity_constant(g, 2, g.diameter());
        double expected = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
            for (double r : g.realized_radii(x))
                expected = std::max(expected, double(g.ball_size(x, r)) / std::pow(1.0 + r, 2));
        CHECK(rep.c_vol == doctest::Approx(expected));
        CHECK(rep.c_vol < 2.0);
    }
    SUBCASE("declared dimension too small is flagged") {
        const auto g = MetricGraph::grid(11, 2);
        const auto rep = regularity_constant(g, 1, g.diameter());
        CHECK(rep.dimension_understated);
    }
    SUBCASE("regularity bound holds exactly") {
        const auto g = MetricGraph::chain(31);
        const auto rep = regularity_constant(g, 1, g.diameter());
        for (std::size_t x = 0; x < g.size(); ++x)
            for (double r : g.realized_radii(x))
                CHECK(double(g.ball_size(x, r)) <= rep.c_vol * (1.0 + r) * (1 + 1e-12));
    }
    CHECK_THROWS_AS(regularity_constant(MetricGraph::chain(5), 1, 1.0), std::invalid_argument);
}

TEST_CASE("summability partial sums") {
    SUBCASE("single site") {
        const auto g = MetricGraph::chain(1);
        const auto res = summability_partial_sums(g, 0, 1.0, {0.0, 5.0});
        CHECK(res.partial_sums[0] == doctest::Approx(1.0));
        CHECK(res.partial_sums[1] == doctest::Approx(1.0));
    }
    SUBCASE("S(0) = 1 on any graph") {
        const auto g = MetricGraph::grid(3, 2);
        const auto res = summability_partial_sums(g, g.center(), 0.5, {0.0});
        CHECK(res.partial_sums[0] == doctest::Approx(1.0));
    }
    SUBCASE("chain converges to 1 + 2(zeta(3) - 1)") {
        // moderate size here; the acceptance suite runs the r = 1e6 version
        const std::size_t L = 20001;
        const auto g = MetricGraph::chain(L, L);
        std::vector<double> schedule;
        for (double r = 1.0; r <= 10000.0; r *= 10.0) schedule.push_back(r);
        const auto res = summability_partial_sums(g, g.center(), 1.0, schedule);
        for (std::size_t i = 0; i + 1 < res.partial_sums.size(); ++i)
            CHECK(res.partial_sums[i] <= res.partial_sums[i + 1]);
        const double target = 1.0 + 2.0 * (zeta3_oracle() - 1.0);
        // tail beyond r = 1e4 is below 2 * integral_{1e4}^inf (1+x)^-3 dx ~ 1e-8
        CHECK(std::abs(res.partial_sums.back() - target) < 2e-8);
        CHECK(res.within_bound);
        CHECK(res.partial_sums.back() < res.proof_bound);
    }
    CHECK_THROWS_AS(summability_partial_sums(MetricGraph::chain(3), 0, 0.0, {1.0}),
                    std::invalid_argument);
}

TEST_CASE("zeta upper bound") {
    const double z2 = zeta_upper_bound(2.0);
    CHECK(z2 >= M_PI * M_PI / 6.0);
    CHECK(z2 <= M_PI * M_PI / 6.0 + 1e-4);
}

TEST_CASE("graph file parsing") {
    SUBCASE("coordinates with l2 metric") {
        const std::string text = R"({
            "sites": ["a", "b", "c"],
            "coordinates": [[0, 0], [3, 4], [0, 1]],
            "metric": "l2",
            "dimension_D": 2,
            "x0": "a"
        })";
        const auto g = MetricGraph::from_json_text(text);
        CHECK(g.size() == 3);
        CHECK(g.distance(0, 1) == doctest::Approx(5.0));
        CHECK(g.center() == 0);
        CHECK(g.label(1) == "b");
    }
    SUBCASE("explicit distance table") {
        const std::string text = R"({
            "distance": [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
            "dimension_D": 1,
            "x0": 1
        })";
        const auto g = MetricGraph::from_json_text(text);
        CHECK(g.distance(0, 2) == 2.0);
        CHECK(g.center() == 1);
    }
    SUBCASE("metric axioms enforced") {
        CHECK_THROWS_AS(MetricGraph::from_json_text(R"({"distance": [[0, 1], [2, 0]]})"),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            MetricGraph::from_json_text(R"({"distance": [[0, 9, 1], [9, 0, 1], [1, 1, 0]]})"),
            std::invalid_argument);
    }
}
