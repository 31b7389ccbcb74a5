#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrlab {

/// Resource limits were exceeded (site caps, dense-dimension caps).
class resource_limit_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class MetricRule { L1, L2, Linf };

MetricRule metric_rule_from_string(const std::string& name);

/// Finite metric space (Gamma, d) with a declared growth dimension D and a
/// designated center site. Distances are stored as a dense table for small
/// graphs and derived from coordinates above the table cap.
///
/// Immutable after construction; all queries are read-only.
class MetricGraph {
  public:
    static constexpr std::size_t kDefaultSiteCap = 4096;
    static constexpr std::size_t kDenseTableCap = 4096;

    /// Path graph 0..length-1 with d(x,y) = |x-y|, D = 1, center at length/2.
    static MetricGraph chain(std::size_t length, std::size_t site_cap = kDefaultSiteCap);

    /// D-dimensional grid (D in {1,2}) with the l1 graph metric.
    static MetricGraph grid(std::size_t side, int dimension, std::size_t site_cap = kDefaultSiteCap);

    /// Explicit distance table. `table` must be square, symmetric, zero-diagonal
    /// and satisfy the triangle inequality.
    static MetricGraph from_distance_table(std::vector<std::vector<double>> table, int dimension_D,
                                           std::size_t x0,
                                           std::vector<std::string> labels = {});

    /// Sites given by coordinates, metric induced by a named rule.
    static MetricGraph from_coordinates(std::vector<std::vector<double>> coords, MetricRule rule,
                                        int dimension_D, std::size_t x0,
                                        std::vector<std::string> labels = {},
                                        std::size_t site_cap = kDefaultSiteCap);

    /// Parse the structured JSON graph format (see README for field names).
    static MetricGraph from_json_file(const std::string& path, std::size_t site_cap = kDefaultSiteCap);
    static MetricGraph from_json_text(const std::string& text, std::size_t site_cap = kDefaultSiteCap);

    std::size_t size() const { return n_sites_; }
    int dimension() const { return dimension_D_; }
    std::size_t center() const { return x0_; }
    const std::string& label(std::size_t x) const;

    double distance(std::size_t x, std::size_t y) const;
    double diameter() const;
    bool is_path_graph() const;

    /// Closed ball {y : d(y,x) <= r}; always contains x.
    std::vector<std::size_t> ball(std::size_t x, double r) const;
    std::size_t ball_size(std::size_t x, double r) const;

    /// Sorted distinct values of d(x, .) including 0.
    std::vector<double> realized_radii(std::size_t x) const;
    /// Sorted distinct values of d over all pairs (dense-table graphs only for
    /// large sets; falls back to per-center radii otherwise).
    std::vector<double> realized_radii_global() const;

  private:
    MetricGraph() = default;
    void check_site(std::size_t x) const;

    std::size_t n_sites_ = 0;
    int dimension_D_ = 0;
    std::size_t x0_ = 0;
    std::vector<std::string> labels_;
    // dense storage (n <= kDenseTableCap), row-major n*n
    std::vector<double> dist_;
    // coordinate storage otherwise
    std::vector<std::vector<double>> coords_;
    MetricRule rule_ = MetricRule::L1;
    bool dense_ = true;
};

struct RegularityReport {
    double c_vol = 1.0;             // sup over sites and realized radii of |B_r(x)|/(1+r)^D
    double attained_radius = 0.0;
    std::size_t attained_site = 0;
    bool nonincreasing_past_diameter = true;
    bool dimension_understated = false; // growth trend of the ratio still positive near r_max
};

/// Measures the volume-growth constant for the declared dimension D over all
/// realized radii up to r_max.
RegularityReport regularity_constant(const MetricGraph& g, int D, double r_max);

struct SummabilityResult {
    std::vector<double> radii;
    std::vector<double> partial_sums;   // S(r) = sum_{x in B_r(x0)} (1+d(x,x0))^-(D+1+eps)
    double proof_bound = 0.0;           // C_vol 2^D zeta(1+eps) + C_vol, zeta via truncation + tail
    bool within_bound = true;
};

/// Partial sums of sum_x (1+d(x,x0))^-(D+1+eps) over growing balls.
SummabilityResult summability_partial_sums(const MetricGraph& g, std::size_t x0, double epsilon,
                                           const std::vector<double>& radius_schedule);

/// Upper bound for zeta(s) = sum k^-s via truncated sum plus integral tail.
double zeta_upper_bound(double s, std::size_t terms = 100000);

}  // namespace lrlab
