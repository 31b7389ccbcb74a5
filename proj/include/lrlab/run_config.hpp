#pragma once

#include <optional>
#include <string>

#include "lrlab/lab.hpp"

namespace lrlab {

/// Configuration problems exit with code 2 at the CLI.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct VerifyConfig {
    std::size_t length = 6;
    int pairs = 100;
    int regions = 10;
    double tolerance = 1e-10;
    std::size_t fermion_length = 3;
    int flavors = 1;
};

struct LemmaConfig {
    // summability partial sums
    std::size_t chain_length = 2000001;
    double epsilon = 1.0;
    double r_max = 1e6;
    std::size_t schedule_points = 25;
    // double-sup grid check
    DecayFunction sup_F = DecayFunction::power_law(6.0);
    double sup_nu = 4.0;
    double sup_k_max = 100.0;
    double sup_density = 16.0;
    // truncation contract
    std::vector<double> truncation_k_list = {0.0, 2.0, 4.0, 6.0, 8.0};
    std::size_t truncation_samples = 5;
};

struct RunConfig {
    ExperimentConfig experiment;
    VerifyConfig verify;
    LemmaConfig lemmas;
    std::string raw_json;  // pretty-printed snapshot for the manifest
};

/// Parses and validates a run configuration. Unknown keys anywhere are hard
/// errors with a JSON-pointer path; parse errors carry line positions.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

DecayFunction decay_from_json_text(const std::string& text);

}  // namespace lrlab
