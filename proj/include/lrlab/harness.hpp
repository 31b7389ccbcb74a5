#pragma once

#include <string>

#include "lrlab/run_config.hpp"

namespace lrlab {

/// Runs one named suite and writes out_dir/{*.csv, *.svg, summary.json,
/// manifest.json}. Returns the process exit code: 0 all-pass, 1 property
/// failure, 2 configuration or resource errors (raised as exceptions by the
/// callee and mapped by the CLI).
int run_suite(const std::string& suite, const RunConfig& config, const std::string& out_dir);

bool is_known_suite(const std::string& suite);

}  // namespace lrlab
