#include "lrlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lrlab {

using nlohmann::json;

MetricRule metric_rule_from_string(const std::string& name) {
    if (name == "l1") return MetricRule::L1;
    if (name == "l2") return MetricRule::L2;
    if (name == "linf") return MetricRule::Linf;
    throw std::invalid_argument("unknown metric rule: " + name);
}

namespace {

double coord_distance(const std::vector<double>& a, const std::vector<double>& b, MetricRule rule) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        switch (rule) {
            case MetricRule::L1: acc += d; break;
            case MetricRule::L2: acc += d * d; break;
            case MetricRule::Linf: acc = std::max(acc, d); break;
        }
    }
    return rule == MetricRule::L2 ? std::sqrt(acc) : acc;
}

void default_labels(std::vector<std::string>& labels, std::size_t n) {
    if (!labels.empty()) {
        if (labels.size() != n) throw std::invalid_argument("label count does not match site count");
        return;
    }
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
}

void validate_metric_axioms(const std::vector<double>& dist, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i * n + i] != 0.0) throw std::invalid_argument("metric: d(x,x) != 0");
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = dist[i * n + j];
            if (dij != dist[j * n + i]) throw std::invalid_argument("metric: asymmetric table");
            if (dij <= 0.0) throw std::invalid_argument("metric: d(x,y) <= 0 for x != y");
        }
    }
    // Triangle inequality. Exhaustive for small graphs, sampled above.
    const double slack = 1e-12;
    if (n <= 512) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    if (dist[i * n + j] > dist[i * n + k] + dist[k * n + j] + slack)
                        throw std::invalid_argument("metric: triangle inequality violated");
    } else {
        std::uint64_t state = 0x243f6a8885a308d3ull;
        auto next = [&state, n]() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            return static_cast<std::size_t>(state % n);
        };
        for (int t = 0; t < 2000000; ++t) {
            const std::size_t i = next(), j = next(), k = next();
            if (dist[i * n + j] > dist[i * n + k] + dist[k * n + j] + slack)
                throw std::invalid_argument("metric: triangle inequality violated");
        }
    }
}

}  // namespace

MetricGraph MetricGraph::chain(std::size_t length, std::size_t site_cap) {
    if (length == 0) throw std::invalid_argument("chain length must be >= 1");
    if (length > site_cap) throw resource_limit_error("chain length exceeds site cap");
    MetricGraph g;
    g.n_sites_ = length;
    g.dimension_D_ = 1;
    g.x0_ = length / 2;
    default_labels(g.labels_, length);
    if (length <= kDenseTableCap) {
        g.dense_ = true;
        g.dist_.resize(length * length);
        for (std::size_t i = 0; i < length; ++i)
            for (std::size_t j = 0; j < length; ++j)
                g.dist_[i * length + j] = std::abs(double(i) - double(j));
    } else {
        g.dense_ = false;
        g.rule_ = MetricRule::L1;
        g.coords_.resize(length);
        for (std::size_t i = 0; i < length; ++i) g.coords_[i] = {double(i)};
    }
    return g;
}

MetricGraph MetricGraph::grid(std::size_t side, int dimension, std::size_t site_cap) {
    if (side == 0) throw std::invalid_argument("grid side must be >= 1");
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
    const std::size_t n = dimension == 1 ? side : side * side;
    if (n > site_cap) throw resource_limit_error("grid size exceeds site cap");

    std::vector<std::vector<double>> coords(n);
    if (dimension == 1) {
        for (std::size_t i = 0; i < side; ++i) coords[i] = {double(i)};
    } else {
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) coords[i * side + j] = {double(i), double(j)};
    }
    // center site: coordinate-wise middle
    std::size_t x0 = dimension == 1 ? side / 2 : (side / 2) * side + side / 2;
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::ostringstream os;
        os << "(";
        for (std::size_t c = 0; c < coords[i].size(); ++c)
            os << (c ? "," : "") << static_cast<long long>(coords[i][c]);
        os << ")";
        labels[i] = os.str();
    }
    return from_coordinates(std::move(coords), MetricRule::L1, dimension, x0, std::move(labels), site_cap);
}

MetricGraph MetricGraph::from_distance_table(std::vector<std::vector<double>> table, int dimension_D,
                                             std::size_t x0, std::vector<std::string> labels) {
    const std::size_t n = table.size();
    if (n == 0) throw std::invalid_argument("empty distance table");
    if (n > kDenseTableCap) throw resource_limit_error("distance table exceeds dense cap");
    if (dimension_D < 0) throw std::invalid_argument("dimension must be nonnegative");
    if (x0 >= n) throw std::invalid_argument("x0 out of range");
    MetricGraph g;
    g.n_sites_ = n;
    g.dimension_D_ = dimension_D;
    g.x0_ = x0;
    default_labels(labels, n);
    g.labels_ = std::move(labels);
    g.dense_ = true;
    g.dist_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (table[i].size() != n) throw std::invalid_argument("distance table is not square");
        for (std::size_t j = 0; j < n; ++j) g.dist_[i * n + j] = table[i][j];
    }
    validate_metric_axioms(g.dist_, n);
    return g;
}

MetricGraph MetricGraph::from_coordinates(std::vector<std::vector<double>> coords, MetricRule rule,
                                          int dimension_D, std::size_t x0,
                                          std::vector<std::string> labels, std::size_t site_cap) {
    const std::size_t n = coords.size();
    if (n == 0) throw std::invalid_argument("empty coordinate list");
    if (n > site_cap) throw resource_limit_error("site count exceeds site cap");
    if (x0 >= n) throw std::invalid_argument("x0 out of range");
    const std::size_t dim = coords[0].size();
    for (const auto& c : coords)
        if (c.size() != dim) throw std::invalid_argument("inconsistent coordinate dimensions");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coords[i] == coords[j]) throw std::invalid_argument("duplicate coordinates");

    MetricGraph g;
    g.n_sites_ = n;
    g.dimension_D_ = dimension_D;
    g.x0_ = x0;
    default_labels(labels, n);
    g.labels_ = std::move(labels);
    if (n <= kDenseTableCap) {
        g.dense_ = true;
        g.dist_.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                g.dist_[i * n + j] = coord_distance(coords[i], coords[j], rule);
    } else {
        g.dense_ = false;
        g.coords_ = std::move(coords);
        g.rule_ = rule;
    }
    return g;
}

MetricGraph MetricGraph::from_json_text(const std::string& text, std::size_t site_cap) {
    json j = json::parse(text);
    const int dim = j.value("dimension_D", 1);
    std::vector<std::string> labels;
    if (j.contains("sites")) labels = j.at("sites").get<std::vector<std::string>>();

    std::size_t x0 = 0;
    bool have_x0 = false;
    if (j.contains("x0")) {
        if (j.at("x0").is_string()) {
            const std::string want = j.at("x0").get<std::string>();
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i] == want) { x0 = i; have_x0 = true; }
            if (!have_x0) throw std::invalid_argument("x0 label not found in sites");
        } else {
            x0 = j.at("x0").get<std::size_t>();
            have_x0 = true;
        }
    }

    if (j.contains("distance")) {
        auto table = j.at("distance").get<std::vector<std::vector<double>>>();
        if (!have_x0) x0 = table.size() / 2;
        return from_distance_table(std::move(table), dim, x0, std::move(labels));
    }
    if (j.contains("coordinates")) {
        auto coords = j.at("coordinates").get<std::vector<std::vector<double>>>();
        const MetricRule rule = metric_rule_from_string(j.value("metric", "l2"));
        if (!have_x0) x0 = coords.size() / 2;
        return from_coordinates(std::move(coords), rule, dim, x0, std::move(labels), site_cap);
    }
    throw std::invalid_argument("graph file needs either \"distance\" or \"coordinates\"");
}

MetricGraph MetricGraph::from_json_file(const std::string& path, std::size_t site_cap) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open graph file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), site_cap);
}

void MetricGraph::check_site(std::size_t x) const {
    if (x >= n_sites_) throw std::invalid_argument("unknown site index");
}

const std::string& MetricGraph::label(std::size_t x) const {
    check_site(x);
    return labels_[x];
}

double MetricGraph::distance(std::size_t x, std::size_t y) const {
    check_site(x);
    check_site(y);
    if (dense_) return dist_[x * n_sites_ + y];
    return coord_distance(coords_[x], coords_[y], rule_);
}

double MetricGraph::diameter() const {
    double m = 0.0;
    if (dense_) {
        for (double d : dist_) m = std::max(m, d);
    } else {
        // coordinate graphs: diameter from bounding box (exact for l1/l2/linf on boxes)
        for (std::size_t i = 0; i < n_sites_; ++i) m = std::max(m, distance(0, i));
        for (std::size_t i = 0; i < n_sites_; ++i) m = std::max(m, distance(n_sites_ - 1, i));
    }
    return m;
}

bool MetricGraph::is_path_graph() const {
    if (n_sites_ <= 512) {
        for (std::size_t i = 0; i < n_sites_; ++i)
            for (std::size_t j = 0; j < n_sites_; ++j)
                if (distance(i, j) != std::abs(double(i) - double(j))) return false;
        return true;
    }
    for (std::size_t i = 0; i + 1 < n_sites_; ++i)
        if (distance(i, i + 1) != 1.0) return false;
    for (std::size_t i = 0; i < n_sites_; i += std::max<std::size_t>(1, n_sites_ / 64))
        for (std::size_t j = 0; j < n_sites_; j += std::max<std::size_t>(1, n_sites_ / 64))
            if (distance(i, j) != std::abs(double(i) - double(j))) return false;
    return true;
}

std::vector<std::size_t> MetricGraph::ball(std::size_t x, double r) const {
    check_site(x);
    if (r < 0) throw std::invalid_argument("ball radius must be nonnegative");
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < n_sites_; ++y)
        if (distance(x, y) <= r) out.push_back(y);
    return out;
}

std::size_t MetricGraph::ball_size(std::size_t x, double r) const {
    check_site(x);
    std::size_t c = 0;
    for (std::size_t y = 0; y < n_sites_; ++y)
        if (distance(x, y) <= r) ++c;
    return c;
}

std::vector<double> MetricGraph::realized_radii(std::size_t x) const {
    check_site(x);
    std::set<double> vals{0.0};
    for (std::size_t y = 0; y < n_sites_; ++y) vals.insert(distance(x, y));
    return {vals.begin(), vals.end()};
}

std::vector<double> MetricGraph::realized_radii_global() const {
    std::set<double> vals{0.0};
    if (dense_) {
        for (double d : dist_) vals.insert(d);
    } else {
        for (std::size_t y = 0; y < n_sites_; ++y) vals.insert(distance(x0_, y));
    }
    return {vals.begin(), vals.end()};
}

// ============================================================================
// Volume growth and summability
// ============================================================================

RegularityReport regularity_constant(const MetricGraph& g, int D, double r_max) {
    const double diam = g.diameter();
    if (r_max < diam) throw std::invalid_argument("r_max must cover the graph diameter");

    // Exhaustive over sites below the dense cap; sampled above (interior +
    // boundary sites dominate the sup on generated graphs).
    std::vector<std::size_t> sites;
    if (g.size() <= MetricGraph::kDenseTableCap) {
        sites.resize(g.size());
        std::iota(sites.begin(), sites.end(), std::size_t{0});
    } else {
        sites = {g.center(), 0, g.size() - 1, g.size() / 4, (3 * g.size()) / 4};
        std::sort(sites.begin(), sites.end());
        sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    }

    RegularityReport rep;
    rep.c_vol = 0.0;
    std::vector<double> trend_r, trend_ratio;
    std::vector<double> dists;
    for (std::size_t x : sites) {
        dists.resize(g.size());
        for (std::size_t y = 0; y < g.size(); ++y) dists[y] = g.distance(x, y);
        std::sort(dists.begin(), dists.end());
        // |B_r(x)| is piecewise constant with jumps at realized distances; sweep.
        std::size_t i = 0;
        while (i < dists.size()) {
            const double r = dists[i];
            if (r > r_max) break;
            while (i < dists.size() && dists[i] == r) ++i;  // count = i after the run
            const double ratio = double(i) / std::pow(1.0 + r, D);
            if (ratio > rep.c_vol) {
                rep.c_vol = ratio;
                rep.attained_radius = r;
                rep.attained_site = x;
            }
            if (x == g.center()) {
                trend_r.push_back(1.0 + r);
                trend_ratio.push_back(ratio);
            }
        }
    }
    // Past the diameter all balls saturate, so the ratio decays like (1+r)^-D.
    rep.nonincreasing_past_diameter = true;

    // Understated D: the center-site ratio still grows across the outer half of radii.
    if (trend_r.size() >= 4) {
        const std::size_t half = trend_r.size() / 2;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t m = 0;
        for (std::size_t i = half; i < trend_r.size(); ++i, ++m) {
            const double lx = std::log(trend_r[i]);
            const double ly = std::log(std::max(trend_ratio[i], 1e-300));
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        const double denom = m * sxx - sx * sx;
        if (denom > 0) {
            const double slope = (m * sxy - sx * sy) / denom;
            rep.dimension_understated = slope > 0.05;
        }
    }
    return rep;
}

double zeta_upper_bound(double s, std::size_t terms) {
    if (s <= 1.0) throw std::invalid_argument("zeta bound needs s > 1");
    double acc = 0.0;
    for (std::size_t k = terms; k >= 1; --k) acc += std::pow(double(k), -s);
    // integral tail: sum_{k>K} k^-s <= int_K^inf x^-s dx = K^(1-s)/(s-1)
    return acc + std::pow(double(terms), 1.0 - s) / (s - 1.0);
}

SummabilityResult summability_partial_sums(const MetricGraph& g, std::size_t x0, double epsilon,
                                           const std::vector<double>& radius_schedule) {
    if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
    const double p = g.dimension() + 1.0 + epsilon;

    // One pass over sites sorted by distance; emit sums at the scheduled radii.
    std::vector<double> dists(g.size());
    for (std::size_t y = 0; y < g.size(); ++y) dists[y] = g.distance(x0, y);
    std::sort(dists.begin(), dists.end());

    auto schedule = radius_schedule;
    std::sort(schedule.begin(), schedule.end());

    SummabilityResult res;
    res.radii = schedule;
    res.partial_sums.reserve(schedule.size());
    double acc = 0.0;
    std::size_t i = 0;
    for (double r : schedule) {
        while (i < dists.size() && dists[i] <= r) {
            acc += std::pow(1.0 + dists[i], -p);
            ++i;
        }
        res.partial_sums.push_back(acc);
    }

    const auto reg = regularity_constant(g, g.dimension(), std::max(g.diameter(), 1.0));
    res.proof_bound = reg.c_vol * std::pow(2.0, g.dimension()) * zeta_upper_bound(1.0 + epsilon) + reg.c_vol;
    const double final_sum = res.partial_sums.empty() ? 0.0 : res.partial_sums.back();
    res.within_bound = final_sum <= res.proof_bound;
    return res;
}

}  // namespace lrlab
