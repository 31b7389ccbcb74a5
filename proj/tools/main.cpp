// lrlab: configuration-driven experiment runner for quasi-local lattice
// dynamics. Subcommands: verify-algebra, verify-lemmas, cone, cauchy, growth,
// radius. Exit codes: 0 all-pass, 1 property failure, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lrlab/harness.hpp"
#include "lrlab/version.hpp"

namespace {

// environment overrides mirror the flags with the LRLAB_ prefix
std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for quasi-local lattice dynamics"};
    app.set_version_flag("--version", lrlab::kVersion);
    app.require_subcommand(1);

    std::string config_path = env_value("LRLAB_CONFIG").value_or("");
    std::string out_dir = env_value("LRLAB_OUT").value_or("out");
    std::optional<int> threads;
    std::optional<double> tolerance;
    std::optional<std::uint64_t> seed;
    if (const auto v = env_value("LRLAB_THREADS")) threads = std::stoi(*v);
    if (const auto v = env_value("LRLAB_TOLERANCE")) tolerance = std::stod(*v);
    if (const auto v = env_value("LRLAB_SEED")) seed = std::stoull(*v);

    const char* suites[] = {"verify-algebra", "verify-lemmas", "cone", "cauchy", "growth", "radius"};
    const char* blurbs[] = {"conditional-expectation and CAR property suite",
                            "summability, double-sup and truncation checks",
                            "commutator light-cone scan",
                            "truncation Cauchy-difference scan",
                            "nu-norm growth scan",
                            "effective support radius scan"};
    std::string chosen;
    for (int i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(suites[i], blurbs[i]);
        sub->add_option("--config", config_path, "JSON run configuration")->required(config_path.empty());
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker count for scan grids");
        sub->add_option("--tolerance", tolerance, "integrator tolerance override");
        sub->add_option("--seed", seed, "seed for the random-operator suites");
        sub->callback([&chosen, name = std::string(suites[i])]() { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        lrlab::RunConfig rc = lrlab::parse_config_file(config_path);
        if (threads) rc.experiment.threads = *threads;
        if (tolerance) rc.experiment.tolerance = *tolerance;
        if (seed) rc.experiment.seed = *seed;
        return lrlab::run_suite(chosen, rc, out_dir);
    } catch (const lrlab::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const lrlab::resource_limit_error& e) {
        std::cerr << "error: resource limit: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
