#pragma once

#include <functional>
#include <optional>
#include <string>

#include "lrlab/fits.hpp"
#include "lrlab/propagator.hpp"
#include "lrlab/quadratic.hpp"

namespace lrlab {

/// Named chain models the scans operate on.
struct ModelSpec {
    std::string name = "uniform_tfim";  // uniform_tfim | linear_growth_tfim |
                                        // time_modulated_tfim | zero
    std::size_t length = 10;
    double J = 1.0;
    double h = 1.0;
    double slope = 1.0;   // linear_growth_tfim
    double omega = 1.0;   // time_modulated_tfim
    std::optional<std::size_t> x0;

    std::size_t resolved_x0() const { return x0.value_or(length / 2); }
    /// Static chains with sz sz bonds and sx fields evolve exactly in the
    /// Majorana-bilinear picture.
    bool quadratic_eligible() const {
        return name == "uniform_tfim" || name == "linear_growth_tfim" || name == "zero";
    }

    ZeroChain build(const ContextPtr& ctx) const;
    QuadraticChain build_quadratic() const;
};

enum class EngineKind { Auto, Dense, Quadratic };

EngineKind engine_from_string(const std::string& name);

struct ExperimentConfig {
    ModelSpec model;
    DecayFunction F = DecayFunction::power_law(8.0);
    DecayFunction G = DecayFunction::power_law(8.0);
    double nu = 1.0;

    std::vector<double> t_grid;        // cone / growth / radius
    std::vector<double> k_list;        // cauchy
    std::optional<double> l_ref;       // cauchy reference; nullopt = full chain
    std::optional<double> dynamics_k;  // cone/growth/radius truncation; nullopt = full
    double delta = 1e-3;               // cone / radius threshold (relative)
    double s = 0.0;
    std::optional<double> t;           // cauchy evolution time; nullopt = s + tau

    std::string observable = "sigma_x";  // A template, placed at x0
    std::string probe = "sigma_x";       // B template for cone scans
    std::optional<double> c_lr;          // measured proxy consumed by tau

    Integrator integrator = Integrator::Auto;
    double step_size = 1.0 / 64.0;
    double tolerance = 1e-8;
    EngineKind engine = EngineKind::Auto;
    std::size_t dense_dim_cap = 4096;
    std::size_t site_cap = 4096;
    int threads = 1;
    std::uint64_t seed = 1;
};

/// Short-time window 1/(4 c_lr C_phi).
double tau_of(double c_lr, double c_phi);

/// mu = min(nu_F - (2D+2), nu_G - (D+2)); requires declared exponents.
double mu_of(const DecayFunction& F, const DecayFunction& G, int dimension);

// ============================================================================
// Scan results
// ============================================================================

struct ConeScanResult {
    std::vector<double> t_grid;
    std::vector<double> distances;
    std::vector<std::vector<double>> table;  // [t][distance]
    std::vector<double> threshold_radius;    // r*(t); meaningful when !saturated
    std::vector<char> saturated;
    GrowthModelComparison fit;  // over unsaturated rows
    double fitted_velocity = 0.0;
    double tnorm_G = 0.0;    // ||| chain |||_G
    double c_lr_proxy = 0.0; // fitted_velocity / tnorm_G
    double a_norm = 0.0, b_norm = 0.0;
    double k_used = -1.0;  // -1 = untruncated
    std::string engine;
};

struct CauchyScanResult {
    std::vector<double> k_list;      // included in the fit
    std::vector<double> differences;
    std::vector<double> excluded_k;  // covering truncations, exactly zero
    FitResult loglog;                // ln(diff) vs ln(1+k)
    bool monotone = true;
    double c_phi = 0.0, tau = 0.0, t_used = 0.0, s_used = 0.0;
    double a_nu_norm = 0.0;
    double l_ref_used = -1.0;  // -1 = full chain
    std::string engine;
};

struct GrowthScanResult {
    std::vector<double> t_grid;
    std::vector<double> nu_norms;
    FitResult ln_fit;  // ln(norm) vs (t - s)
    double gamma_proxy = 0.0;  // slope / C_phi
    EnvelopeFit envelope;
    bool anchor_ok = false;  // the t = s entry equals ||A||_{nu,x0}
    double a_nu_norm = 0.0;
    double c_phi = 0.0;
    double k_used = -1.0;
    std::string engine;
};

struct RadiusScanResult {
    std::vector<double> t_grid;
    std::vector<double> radii;
    std::vector<double> achieved;   // residual ratio at the reported radius
    GrowthModelComparison fit;
    bool ratio_increasing = false;  // r(t)/t non-decreasing across the grid
    bool degenerate = false;        // delta >= 1 forces r = 0
    double a_norm = 0.0;
    double k_used = -1.0;
    std::string engine;
};

ConeScanResult cone_scan(const ExperimentConfig& config);
CauchyScanResult cauchy_scan(const ExperimentConfig& config);
GrowthScanResult nu_norm_growth_scan(const ExperimentConfig& config);
RadiusScanResult support_radius_scan(const ExperimentConfig& config);

/// Largest truncation k from `candidates` whose dense evolution region fits
/// the cap; quadratic-eligible models always accept the full chain.
double largest_feasible_k(const ExperimentConfig& config, const std::vector<double>& candidates);

/// Evenly spaced grid helper (from, to inclusive).
std::vector<double> linspace(double from, double to, std::size_t points);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be
/// written into index-addressed slots by the caller for a deterministic merge.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lrlab
