#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lrlab/harness.hpp"
#include "lrlab/report.hpp"

using namespace lrlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("lrlab_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("minimal scan config") {
        const auto rc = parse_config_text(R"({
            "model": {"name": "uniform_tfim", "length": 8},
            "scan": {"t_grid": {"from": 0, "to": 1, "points": 5}, "delta": 1e-3},
            "threads": 2
        })");
        CHECK(rc.experiment.model.length == 8);
        CHECK(rc.experiment.t_grid.size() == 5);
        CHECK(rc.experiment.threads == 2);
    }
    SUBCASE("unknown keys are hard errors with a pointer path") {
        try {
            parse_config_text(R"({"model": {"name": "zero", "lenght": 5}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("/model/lenght") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_config_text(R"({"modle": {}})"), ConfigError);
    }
    SUBCASE("parse errors carry line numbers") {
        try {
            parse_config_text("{\n  \"model\": {\n  \"name\": oops\n}}");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SUBCASE("decay rules") {
        const auto rc = parse_config_text(R"({
            "decay": {"F": {"rule": "exponential", "b": 2.0},
                      "G": {"rule": "power_law", "nu": 6.0}}
        })");
        CHECK(rc.experiment.F(1.0) == doctest::Approx(std::exp(-2.0)));
        CHECK(*rc.experiment.G.declared_nu() == 6.0);
        CHECK_THROWS_AS(parse_config_text(R"({"decay": {"F": {"rule": "nope"}}})"), ConfigError);
    }
    SUBCASE("full sentinels and geometric grids") {
        const auto rc = parse_config_text(R"({
            "scan": {"k": "full", "l_ref": "full",
                     "t_grid": {"from": 0.1, "to": 0.8, "points": 4, "spacing": "geometric"}}
        })");
        CHECK_FALSE(rc.experiment.dynamics_k.has_value());
        CHECK_FALSE(rc.experiment.l_ref.has_value());
        REQUIRE(rc.experiment.t_grid.size() == 4);
        CHECK(rc.experiment.t_grid.front() == doctest::Approx(0.1));
        CHECK(rc.experiment.t_grid.back() == doctest::Approx(0.8));
        const double ratio1 = rc.experiment.t_grid[1] / rc.experiment.t_grid[0];
        const double ratio2 = rc.experiment.t_grid[2] / rc.experiment.t_grid[1];
        CHECK(ratio1 == doctest::Approx(ratio2));
    }
}

TEST_CASE("verify-algebra suite runs green") {
    auto rc = parse_config_text(R"({
        "verify": {"length": 4, "pairs": 20, "regions": 4, "tolerance": 1e-10,
                   "fermion_length": 2},
        "seed": 7
    })");
    const auto dir = temp_dir("verify");
    CHECK(run_suite("verify-algebra", rc, dir.string()) == 0);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    const auto summary = slurp(dir / "summary.json");
    CHECK(summary.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("verify-lemmas suite runs green") {
    auto rc = parse_config_text(R"({
        "model": {"name": "uniform_tfim", "length": 9},
        "lemmas": {
            "summability": {"length": 20001, "r_max": 10000, "epsilon": 1.0,
                            "schedule_points": 8},
            "sup_check": {"F": {"rule": "power_law", "nu": 6.0}, "nu": 4.0,
                          "k_max": 25.0, "m_grid_density": 16.0},
            "truncation": {"k_list": [0, 2, 4], "t_samples": 3}
        }
    })");
    const auto dir = temp_dir("lemmas");
    CHECK(run_suite("verify-lemmas", rc, dir.string()) == 0);
    CHECK(fs::exists(dir / "summability.csv"));
    CHECK(fs::exists(dir / "truncation_gap.csv"));
}

TEST_CASE("cone suite emits deterministic artifacts") {
    auto rc = parse_config_text(R"({
        "model": {"name": "uniform_tfim", "length": 5},
        "scan": {"t_grid": {"from": 0, "to": 0.5, "points": 5}},
        "threads": 3
    })");
    const auto dir1 = temp_dir("cone1");
    const auto dir2 = temp_dir("cone2");
    CHECK(run_suite("cone", rc, dir1.string()) == 0);
    CHECK(run_suite("cone", rc, dir2.string()) == 0);

    const auto csv = slurp(dir1 / "cone.csv");
    CHECK(csv.rfind("t,r,value\n", 0) == 0);
    CHECK(fs::exists(dir1 / "cone.svg"));
    CHECK(file_checksum((dir1 / "cone.csv").string()) ==
          file_checksum((dir2 / "cone.csv").string()));

    // thread count must not change the numbers either
    auto rc1 = rc;
    rc1.experiment.threads = 1;
    const auto dir3 = temp_dir("cone3");
    CHECK(run_suite("cone", rc1, dir3.string()) == 0);
    CHECK(file_checksum((dir1 / "cone.csv").string()) ==
          file_checksum((dir3 / "cone.csv").string()));
}

TEST_CASE("radius suite on the quadratic engine") {
    auto rc = parse_config_text(R"({
        "model": {"name": "uniform_tfim", "length": 41},
        "scan": {"t_grid": {"from": 0, "to": 1.0, "points": 6}, "delta": 1e-3},
        "integrator": {"engine": "quadratic"}
    })");
    const auto dir = temp_dir("radius");
    CHECK(run_suite("radius", rc, dir.string()) == 0);
    const auto summary = slurp(dir / "summary.json");
    CHECK(summary.find("\"engine\": \"quadratic\"") != std::string::npos);
}

TEST_CASE("unknown suite rejected") {
    auto rc = parse_config_text(R"({})");
    CHECK_THROWS_AS(run_suite("mystery", rc, temp_dir("nope").string()), ConfigError);
    CHECK(is_known_suite("cone"));
    CHECK_FALSE(is_known_suite("mystery"));
}

TEST_CASE("manifest lists outputs with checksums") {
    auto rc = parse_config_text(R"({
        "model": {"name": "zero", "length": 4},
        "scan": {"t_grid": [0.0, 0.1, 0.2]}
    })");
    const auto dir = temp_dir("manifest");
    CHECK(run_suite("cone", rc, dir.string()) == 0);
    const auto manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("cone.csv") != std::string::npos);
    CHECK(manifest.find("fnv1a64") != std::string::npos);
    CHECK(manifest.find("summary.json") != std::string::npos);
}
