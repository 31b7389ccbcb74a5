#include "lrlab/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include "json.hpp"
#include "lrlab/localization.hpp"
#include "lrlab/report.hpp"
#include "lrlab/version.hpp"

namespace lrlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ============================================================================
// Shared output plumbing
// ============================================================================

struct OutputSink {
    fs::path dir;
    std::vector<std::string> files;

    explicit OutputSink(const std::string& out_dir) : dir(out_dir) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + out_dir);
    }
    std::string path(const std::string& name) {
        files.push_back(name);
        return (dir / name).string();
    }
};

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

void write_manifest(OutputSink& sink, const std::string& suite, const RunConfig& rc) {
    json m;
    m["version"] = kVersion;
    m["suite"] = suite;
    m["timestamp"] = timestamp_now();
    m["threads"] = rc.experiment.threads;
    m["integrator"] = {{"step_size", rc.experiment.step_size},
                       {"tolerance", rc.experiment.tolerance}};
    m["config"] = json::parse(rc.raw_json);
    json outputs = json::array();
    for (const auto& f : sink.files)
        outputs.push_back({{"path", f}, {"fnv1a64", file_checksum((sink.dir / f).string())}});
    m["outputs"] = outputs;
    std::ofstream out(sink.dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
}

json fit_to_json(const FitResult& f) {
    return {{"slope", f.slope},        {"intercept", f.intercept},
            {"residual_rms", f.residual_rms}, {"n_points", f.n_points},
            {"valid", f.valid},        {"x_min", f.x_min},
            {"x_max", f.x_max}};
}

json models_to_json(const GrowthModelComparison& c) {
    return {{"linear", fit_to_json(c.linear)},
            {"log_linear", fit_to_json(c.log_linear)},
            {"linear_rms_r", c.linear_rms_r},
            {"exponential_rms_r", c.exponential_rms_r}};
}

void write_summary(OutputSink& sink, const json& summary) {
    std::ofstream out(sink.path("summary.json"), std::ios::binary);
    out << summary.dump(2) << "\n";
}

struct PropertyLog {
    json entries = json::array();
    bool all_pass = true;

    void record(const std::string& name, bool pass, double worst, double tol) {
        entries.push_back({{"name", name}, {"pass", pass}, {"worst", worst}, {"tolerance", tol}});
        all_pass = all_pass && pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " (worst " << worst << ", tol "
                  << tol << ")\n";
    }
    void record_flag(const std::string& name, bool pass) {
        entries.push_back({{"name", name}, {"pass", pass}});
        all_pass = all_pass && pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << "\n";
    }
};

std::vector<std::size_t> random_region(std::mt19937_64& rng, std::size_t n_sites) {
    std::uniform_int_distribution<std::size_t> count(1, n_sites);
    std::vector<std::size_t> all(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count(rng));
    std::sort(all.begin(), all.end());
    return all;
}

// ============================================================================
// verify-algebra
// ============================================================================

int run_verify_algebra(const RunConfig& rc, OutputSink& sink) {
    const auto& v = rc.verify;
    PropertyLog log;
    std::mt19937_64 rng(rc.experiment.seed);

    // ---- spin backend -------------------------------------------------
    auto graph = std::make_shared<MetricGraph>(MetricGraph::chain(v.length));
    auto ctx = AlgebraContext::spin(graph, 2, rc.experiment.dense_dim_cap);
    std::vector<std::size_t> all_sites(v.length);
    for (std::size_t i = 0; i < v.length; ++i) all_sites[i] = i;

    double worst_defining = 0, worst_module = 0, worst_compose = 0, worst_contract = 0,
           worst_norm_embed = 0, worst_unital = 0;
    for (int reg = 0; reg < v.regions; ++reg) {
        const auto m = random_region(rng, v.length);
        const auto m2 = random_region(rng, v.length);
        std::vector<std::size_t> m_cap;
        std::set_intersection(m.begin(), m.end(), m2.begin(), m2.end(), std::back_inserter(m_cap));

        for (int p = 0; p < v.pairs / v.regions + 1; ++p) {
            const auto a = random_operator(ctx, all_sites, rng);
            const auto b_small = random_operator(ctx, m, rng);
            const auto b = embed(b_small, all_sites);
            const auto ea = conditional_expectation(a, m);

            worst_defining = std::max(worst_defining,
                                      std::abs(tracial_state(multiply(a, b)) -
                                               tracial_state(multiply(embed(ea, all_sites), b))));

            const auto c_small = random_operator(ctx, m, rng);
            const auto sandwich = conditional_expectation(
                multiply(multiply(b_small, a), embed(c_small, all_sites)), m);
            const auto direct = multiply(multiply(b_small, ea), c_small);
            worst_module = std::max(worst_module, distance(sandwich, direct));

            const auto nested = conditional_expectation(conditional_expectation(a, m2), m);
            worst_compose = std::max(worst_compose, distance(nested, conditional_expectation(a, m_cap)));

            worst_contract = std::max(worst_contract, op_norm(ea) - op_norm(a));

            worst_norm_embed =
                std::max(worst_norm_embed, std::abs(op_norm(embed(b_small, all_sites)) - op_norm(b_small)));
        }
        const auto one = identity_op(ctx, all_sites);
        worst_unital = std::max(worst_unital, distance(conditional_expectation(one, m),
                                                       identity_op(ctx, m)));
    }
    log.record("conditional expectation: defining property", worst_defining <= v.tolerance,
               worst_defining, v.tolerance);
    log.record("conditional expectation: module property", worst_module <= v.tolerance,
               worst_module, v.tolerance);
    log.record("conditional expectation: composition", worst_compose <= v.tolerance, worst_compose,
               v.tolerance);
    log.record("conditional expectation: norm contraction", worst_contract <= 1e-12,
               worst_contract, 1e-12);
    log.record("embedding preserves the norm", worst_norm_embed <= 1e-12, worst_norm_embed, 1e-12);
    log.record("conditional expectation: unital", worst_unital <= v.tolerance, worst_unital,
               v.tolerance);

    // ---- fermion backend ----------------------------------------------
    auto fgraph = std::make_shared<MetricGraph>(MetricGraph::chain(v.fermion_length));
    auto fctx = AlgebraContext::fermion(fgraph, v.flavors, rc.experiment.dense_dim_cap);
    std::vector<std::size_t> fsites(v.fermion_length);
    for (std::size_t i = 0; i < v.fermion_length; ++i) fsites[i] = i;

    double worst_car = 0;
    for (std::size_t x = 0; x < v.fermion_length; ++x) {
        for (std::size_t y = 0; y < v.fermion_length; ++y) {
            for (int fx = 0; fx < v.flavors; ++fx) {
                for (int fy = 0; fy < v.flavors; ++fy) {
                    const auto ax = car_annihilation(fctx, x, fx);
                    const auto cy = car_creation(fctx, y, fy);
                    const auto ay = car_annihilation(fctx, y, fy);
                    const double want = (x == y && fx == fy) ? 1.0 : 0.0;
                    const auto acc = anticommutator(ax, cy);
                    worst_car = std::max(
                        worst_car, distance(acc, scale(want, identity_op(fctx, acc.support))));
                    worst_car = std::max(worst_car, op_norm(anticommutator(ax, ay)));
                }
            }
        }
    }
    log.record("CAR relations", worst_car <= 1e-12, worst_car, 1e-12);

    double worst_even_disjoint = 0;
    double worst_parity = 0;
    for (int p = 0; p < 16; ++p) {
        const auto a_even = random_even(fctx, {0}, rng);
        const auto b_any = random_operator(fctx, {v.fermion_length - 1}, rng);
        worst_even_disjoint = std::max(worst_even_disjoint, op_norm(commutator(a_even, b_any)));

        const auto a_full = random_even(fctx, fsites, rng);
        const auto m = random_region(rng, v.fermion_length);
        const auto ea = conditional_expectation(a_full, m);
        const auto flipped = grading(ea, M_PI);
        worst_parity = std::max(worst_parity, distance(flipped, ea));
    }
    log.record("even operators commute across disjoint supports", worst_even_disjoint <= 1e-12,
               worst_even_disjoint, 1e-12);
    log.record("conditional expectation preserves parity", worst_parity <= v.tolerance,
               worst_parity, v.tolerance);

    const auto astar = car_creation(fctx, 0, 0);
    const double grading_defect =
        distance(grading(astar, M_PI), scale(-1.0, astar)) +
        distance(grading(number_op(fctx, 0), M_PI), number_op(fctx, 0));
    log.record("grading: g_pi(a*) = -a*, g_pi(n) = n", grading_defect <= 1e-12, grading_defect,
               1e-12);

    json summary;
    summary["suite"] = "verify-algebra";
    summary["properties"] = log.entries;
    summary["pass"] = log.all_pass;
    write_summary(sink, summary);
    return log.all_pass ? 0 : 1;
}

// ============================================================================
// verify-lemmas
// ============================================================================

int run_verify_lemmas(const RunConfig& rc, OutputSink& sink) {
    const auto& lc = rc.lemmas;
    PropertyLog log;

    // summability partial sums on a long chain
    {
        const auto g = MetricGraph::chain(lc.chain_length, std::max<std::size_t>(lc.chain_length,
                                                                                 rc.experiment.site_cap));
        std::vector<double> schedule{0.0};
        for (std::size_t i = 0; i < lc.schedule_points; ++i)
            schedule.push_back(std::pow(lc.r_max, double(i + 1) / double(lc.schedule_points)));
        const auto res = summability_partial_sums(g, g.center(), lc.epsilon, schedule);

        bool monotone = true;
        for (std::size_t i = 0; i + 1 < res.partial_sums.size(); ++i)
            if (res.partial_sums[i + 1] < res.partial_sums[i]) monotone = false;
        log.record_flag("summability: partial sums monotone", monotone);
        log.record("summability: below the proof bound",
                   res.partial_sums.back() <= res.proof_bound, res.partial_sums.back(),
                   res.proof_bound);

        std::vector<CsvRow> rows;
        for (std::size_t i = 0; i < res.radii.size(); ++i)
            rows.push_back({0.0, res.radii[i], res.partial_sums[i]});
        write_scan_csv(sink.path("summability.csv"), "t,r_or_k,value", rows);
    }

    // double-sup grid stability under k_max doubling
    {
        const auto one = lemma_sup_check(lc.sup_F, lc.sup_nu, lc.sup_k_max, lc.sup_density);
        const auto two = lemma_sup_check(lc.sup_F, lc.sup_nu, 2.0 * lc.sup_k_max, lc.sup_density);
        const double shift = std::abs(two.supremum - one.supremum) / std::max(one.supremum, 1e-300);
        log.record("double-sup value stable under k_max doubling", shift < 0.01, shift, 0.01);
        log.record_flag("double-sup bounded", one.bounded && two.bounded);
    }

    // truncation contract on the configured model
    {
        auto graph = std::make_shared<MetricGraph>(
            MetricGraph::chain(rc.experiment.model.length, rc.experiment.site_cap));
        auto ctx = AlgebraContext::spin(graph, 2, rc.experiment.dense_dim_cap);
        const auto chain = rc.experiment.model.build(ctx);
        const std::size_t x0 = rc.experiment.model.resolved_x0();
        const auto samples = linspace(chain.t_min(), chain.t_min() + 1.0,
                                      std::max<std::size_t>(2, lc.truncation_samples));
        const double c_phi = growth_coefficient(chain, rc.experiment.G, x0, samples).c_phi;

        double k_cover = 0.0;
        for (std::size_t y = 0; y < graph->size(); ++y)
            k_cover = std::max(k_cover, 2.0 * graph->distance(x0, y));
        auto k_list = lc.truncation_k_list;
        k_list.push_back(k_cover + 2.0);
        std::sort(k_list.begin(), k_list.end());

        bool support_ok = true, norm_ok = true;
        std::vector<double> gaps;
        const auto a = pauli(ctx, x0, 'x');
        for (double k : k_list) {
            const auto cut = truncate(chain, k, x0);
            for (const auto& [x, ts] : cut.terms())
                for (const auto& term : ts)
                    for (std::size_t site : term.op.support)
                        if (graph->distance(site, x0) > k) support_ok = false;
            if (c_phi > 0 &&
                uniform_norm(cut, rc.experiment.G, samples) > c_phi * (1.0 + k / 2.0) + 1e-9)
                norm_ok = false;
            gaps.push_back(liouvillian_truncation_gap(chain, k, a, samples, x0));
        }
        bool gap_monotone = true;
        for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
            if (gaps[i + 1] > gaps[i]) gap_monotone = false;
        log.record_flag("truncation: supports inside B_k(x0)", support_ok);
        log.record_flag("truncation: uniform norm bound C_phi (1 + k/2)", norm_ok);
        log.record_flag("truncation: gap monotone in k", gap_monotone);
        log.record("truncation: gap exactly zero at covering k", gaps.back() == 0.0, gaps.back(),
                   0.0);

        std::vector<CsvRow> rows;
        for (std::size_t i = 0; i < k_list.size(); ++i) rows.push_back({0.0, k_list[i], gaps[i]});
        write_scan_csv(sink.path("truncation_gap.csv"), "t,r_or_k,value", rows);
    }

    json summary;
    summary["suite"] = "verify-lemmas";
    summary["properties"] = log.entries;
    summary["pass"] = log.all_pass;
    write_summary(sink, summary);
    return log.all_pass ? 0 : 1;
}

// ============================================================================
// Scan suites
// ============================================================================

json guard_json(bool ran, double shift, double limit) {
    return {{"ran", ran}, {"shift", shift}, {"limit", limit}, {"pass", !ran || shift <= limit}};
}

int run_cone(const RunConfig& rc, OutputSink& sink) {
    auto res = cone_scan(rc.experiment);

    std::vector<CsvRow> rows;
    for (std::size_t it = 0; it < res.t_grid.size(); ++it)
        for (std::size_t id = 0; id < res.distances.size(); ++id)
            rows.push_back({res.t_grid[it], res.distances[id], res.table[it][id]});
    write_scan_csv(sink.path("cone.csv"), "t,r,value", rows);

    PlotSeries series{"r*(t)", res.t_grid, res.threshold_radius};
    write_svg_lineplot(sink.path("cone.svg"), "commutator threshold radius", "t", "r*", {series});

    // tolerance/10 convergence guard; only stepped integrators can shift, the
    // exact paths reproduce themselves bit for bit
    const bool stepped = res.engine == "dense" &&
                         (rc.experiment.integrator == Integrator::Magnus2 ||
                          rc.experiment.model.name == "time_modulated_tfim");
    bool guard_ran = false;
    double guard_shift = 0.0;
    if (stepped) {
        auto cfg10 = rc.experiment;
        cfg10.tolerance /= 10.0;
        const auto res10 = cone_scan(cfg10);
        guard_ran = true;
        guard_shift = std::abs(res10.fitted_velocity - res.fitted_velocity);
    }
    const double guard_limit = std::max(res.fit.linear.residual_rms, 1e-9);

    json summary;
    summary["suite"] = "cone";
    summary["engine"] = res.engine;
    summary["k_used"] = res.k_used;
    summary["t_grid"] = res.t_grid;
    summary["distances"] = res.distances;
    summary["threshold_radius"] = res.threshold_radius;
    summary["saturated"] = json::array();
    for (char s : res.saturated) summary["saturated"].push_back(bool(s));
    summary["fit"] = models_to_json(res.fit);
    summary["fitted_velocity"] = res.fitted_velocity;
    summary["tnorm_G"] = res.tnorm_G;
    summary["c_lr_proxy"] = res.c_lr_proxy;
    summary["a_norm"] = res.a_norm;
    summary["b_norm"] = res.b_norm;
    summary["guard"] = guard_json(guard_ran, guard_shift, guard_limit);
    const bool pass = !guard_ran || guard_shift <= guard_limit;
    summary["pass"] = pass;
    write_summary(sink, summary);
    return pass ? 0 : 1;
}

int run_cauchy(const RunConfig& rc, OutputSink& sink) {
    const auto res = cauchy_scan(rc.experiment);

    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < res.k_list.size(); ++i)
        rows.push_back({res.t_used, res.k_list[i], res.differences[i]});
    write_scan_csv(sink.path("cauchy.csv"), "t,r_or_k,value", rows);

    PlotSeries series{"ln diff", {}, {}};
    for (std::size_t i = 0; i < res.k_list.size(); ++i) {
        series.x.push_back(std::log1p(res.k_list[i]));
        series.y.push_back(std::log(res.differences[i]));
    }
    write_svg_lineplot(sink.path("cauchy.svg"), "truncation Cauchy differences", "ln(1+k)",
                       "ln diff", {series});

    json summary;
    summary["suite"] = "cauchy";
    summary["engine"] = res.engine;
    summary["k_list"] = res.k_list;
    summary["differences"] = res.differences;
    summary["excluded_k"] = res.excluded_k;
    summary["loglog"] = fit_to_json(res.loglog);
    summary["monotone"] = res.monotone;
    summary["c_phi"] = res.c_phi;
    summary["tau"] = res.tau;
    summary["t_used"] = res.t_used;
    summary["s_used"] = res.s_used;
    summary["a_nu_norm"] = res.a_nu_norm;
    summary["l_ref_used"] = res.l_ref_used;
    summary["pass"] = true;
    write_summary(sink, summary);
    return 0;
}

int run_growth(const RunConfig& rc, OutputSink& sink) {
    const auto res = nu_norm_growth_scan(rc.experiment);

    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < res.t_grid.size(); ++i)
        rows.push_back({res.t_grid[i], res.k_used, res.nu_norms[i]});
    write_scan_csv(sink.path("growth.csv"), "t,r_or_k,value", rows);

    PlotSeries series{"ln norm", res.t_grid, {}};
    for (double n : res.nu_norms) series.y.push_back(std::log(std::max(n, 1e-300)));
    write_svg_lineplot(sink.path("growth.svg"), "nu-norm growth", "t", "ln ||alpha A||_nu",
                       {series});

    json summary;
    summary["suite"] = "growth";
    summary["engine"] = res.engine;
    summary["k_used"] = res.k_used;
    summary["t_grid"] = res.t_grid;
    summary["nu_norms"] = res.nu_norms;
    summary["ln_fit"] = fit_to_json(res.ln_fit);
    summary["gamma_proxy"] = res.gamma_proxy;
    summary["envelope"] = {{"shift", res.envelope.shift},
                           {"residual_rel", res.envelope.residual_rel},
                           {"base", fit_to_json(res.envelope.base)}};
    summary["anchor_ok"] = res.anchor_ok;
    summary["a_nu_norm"] = res.a_nu_norm;
    summary["c_phi"] = res.c_phi;
    const bool pass = res.anchor_ok || res.t_grid.front() != rc.experiment.s;
    summary["pass"] = pass;
    write_summary(sink, summary);
    return pass ? 0 : 1;
}

int run_radius(const RunConfig& rc, OutputSink& sink) {
    const auto res = support_radius_scan(rc.experiment);

    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < res.t_grid.size(); ++i)
        rows.push_back({res.t_grid[i], res.radii[i], res.achieved[i]});
    write_scan_csv(sink.path("radius.csv"), "t,r_or_k,value", rows);

    write_svg_lineplot(sink.path("radius.svg"), "effective support radius", "t", "r(t)",
                       {{"r(t)", res.t_grid, res.radii}});

    json summary;
    summary["suite"] = "radius";
    summary["engine"] = res.engine;
    summary["k_used"] = res.k_used;
    summary["t_grid"] = res.t_grid;
    summary["radii"] = res.radii;
    summary["achieved"] = res.achieved;
    summary["fit"] = models_to_json(res.fit);
    summary["ratio_increasing"] = res.ratio_increasing;
    summary["degenerate"] = res.degenerate;
    summary["a_norm"] = res.a_norm;
    summary["pass"] = true;
    write_summary(sink, summary);
    return 0;
}

}  // namespace

bool is_known_suite(const std::string& suite) {
    return suite == "verify-algebra" || suite == "verify-lemmas" || suite == "cone" ||
           suite == "cauchy" || suite == "growth" || suite == "radius";
}

int run_suite(const std::string& suite, const RunConfig& config, const std::string& out_dir) {
    OutputSink sink(out_dir);
    int code = 0;
    if (suite == "verify-algebra") code = run_verify_algebra(config, sink);
    else if (suite == "verify-lemmas") code = run_verify_lemmas(config, sink);
    else if (suite == "cone") code = run_cone(config, sink);
    else if (suite == "cauchy") code = run_cauchy(config, sink);
    else if (suite == "growth") code = run_growth(config, sink);
    else if (suite == "radius") code = run_radius(config, sink);
    else throw ConfigError("unknown suite: " + suite);
    write_manifest(sink, suite, config);
    return code;
}

}  // namespace lrlab
