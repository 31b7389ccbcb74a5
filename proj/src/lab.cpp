#include "lrlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "lrlab/localization.hpp"

namespace lrlab {

EngineKind engine_from_string(const std::string& name) {
    if (name == "auto") return EngineKind::Auto;
    if (name == "dense") return EngineKind::Dense;
    if (name == "quadratic") return EngineKind::Quadratic;
    throw std::invalid_argument("unknown engine: " + name);
}

std::vector<double> linspace(double from, double to, std::size_t points) {
    if (points < 2) return {from};
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = from + (to - from) * double(i) / double(points - 1);
    out.back() = to;
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(threads, int(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double tau_of(double c_lr, double c_phi) {
    if (c_lr <= 0 || c_phi <= 0) throw std::invalid_argument("tau needs positive constants");
    return 1.0 / (4.0 * c_lr * c_phi);
}

double mu_of(const DecayFunction& F, const DecayFunction& G, int dimension) {
    const auto nf = F.declared_nu();
    const auto ng = G.declared_nu();
    if (!nf || !ng) throw std::invalid_argument("mu requires declared decay exponents");
    return std::min(*nf - (2.0 * dimension + 2.0), *ng - (dimension + 2.0));
}

// ============================================================================
// ModelSpec
// ============================================================================

ZeroChain ModelSpec::build(const ContextPtr& ctx) const {
    if (name == "uniform_tfim") return model_uniform_tfim(ctx, J, h);
    if (name == "linear_growth_tfim")
        return model_linear_growth(model_uniform_tfim(ctx, J, h), resolved_x0(), slope);
    if (name == "time_modulated_tfim") return model_time_modulated_tfim(ctx, J, h, omega);
    if (name == "zero") return model_zero(ctx);
    throw std::invalid_argument("unknown model: " + name);
}

QuadraticChain ModelSpec::build_quadratic() const {
    if (!quadratic_eligible())
        throw std::invalid_argument("model has no quadratic representation: " + name);
    QuadraticChain chain;
    chain.length = length;
    chain.x0 = resolved_x0();
    chain.bonds = Eigen::VectorXd::Zero(length >= 1 ? length - 1 : 0);
    chain.fields = Eigen::VectorXd::Zero(length);
    if (name == "zero") return chain;
    for (std::size_t x = 0; x < length; ++x) {
        const double factor =
            name == "linear_growth_tfim" ? 1.0 + slope * std::abs(double(x) - double(chain.x0)) : 1.0;
        chain.fields(x) = h * factor;
        if (x + 1 < length) chain.bonds(x) = J * factor;
    }
    return chain;
}

// ============================================================================
// Shared scan plumbing
// ============================================================================

namespace {

char axis_of(const std::string& name) {
    if (name == "sigma_x") return 'x';
    if (name == "sigma_y") return 'y';
    if (name == "sigma_z") return 'z';
    throw std::invalid_argument("unknown operator template: " + name);
}

bool dense_feasible(std::size_t q, std::size_t n_sites, std::size_t cap) {
    std::size_t dim = 1;
    for (std::size_t i = 0; i < n_sites; ++i) {
        if (dim > cap / q) return false;
        dim *= q;
    }
    return dim <= cap;
}

struct Workspace {
    std::shared_ptr<const MetricGraph> graph;
    ContextPtr ctx;
    ZeroChain chain;
    std::size_t x0;

    Workspace(const ExperimentConfig& cfg)
        : graph(std::make_shared<MetricGraph>(
              MetricGraph::chain(cfg.model.length, cfg.site_cap))),
          ctx(AlgebraContext::spin(graph, 2, cfg.dense_dim_cap)),
          chain(cfg.model.build(ctx)),
          x0(cfg.model.resolved_x0()) {
        if (x0 >= graph->size()) throw std::invalid_argument("x0 outside the chain");
    }
};

// Evolution region for a possibly truncated chain plus the observable site.
std::vector<std::size_t> evolution_region(const ZeroChain& chain, std::size_t x0) {
    auto sites = chain.footprint();
    if (!std::binary_search(sites.begin(), sites.end(), x0)) {
        sites.push_back(x0);
        std::sort(sites.begin(), sites.end());
    }
    return sites;
}

// Chooses dense vs quadratic for a scan whose evolution touches `region`.
std::string resolve_engine(const ExperimentConfig& cfg, std::size_t region_sites,
                           bool* use_quadratic) {
    const bool fits = dense_feasible(2, region_sites, cfg.dense_dim_cap);
    switch (cfg.engine) {
        case EngineKind::Dense:
            if (!fits) throw resource_limit_error("dense engine: region exceeds the dimension cap");
            *use_quadratic = false;
            return "dense";
        case EngineKind::Quadratic:
            if (!cfg.model.quadratic_eligible())
                throw std::invalid_argument("quadratic engine: model not quadratic");
            *use_quadratic = true;
            return "quadratic";
        case EngineKind::Auto:
            if (fits) {
                *use_quadratic = false;
                return "dense";
            }
            if (!cfg.model.quadratic_eligible())
                throw resource_limit_error(
                    "region exceeds the dense cap and the model has no quadratic representation");
            *use_quadratic = true;
            return "quadratic";
    }
    throw std::logic_error("unreachable");
}

void require_sigma_x_for_quadratic(const std::string& name) {
    if (name != "sigma_x")
        throw std::invalid_argument(
            "quadratic engine evolves sigma_x observables only (other single-site operators are "
            "Jordan-Wigner strings)");
}

std::map<double, std::vector<std::size_t>> probe_sites_by_distance(const MetricGraph& g,
                                                                   std::size_t x0) {
    std::map<double, std::vector<std::size_t>> out;
    for (std::size_t y = 0; y < g.size(); ++y) {
        const double d = g.distance(x0, y);
        if (d >= 1.0) out[d].push_back(y);
    }
    return out;
}

}  // namespace

double largest_feasible_k(const ExperimentConfig& config, const std::vector<double>& candidates) {
    if (config.model.quadratic_eligible() && config.engine != EngineKind::Dense) return -1.0;
    Workspace ws(config);
    double best = 0.0;
    bool any = false;
    for (double k : candidates) {
        const auto cut = truncate(ws.chain, k, ws.x0);
        if (dense_feasible(2, evolution_region(cut, ws.x0).size(), config.dense_dim_cap)) {
            best = std::max(best, k);
            any = true;
        }
    }
    if (!any) throw resource_limit_error("no candidate truncation fits the dense cap");
    return best;
}

// ============================================================================
// Cone scan
// ============================================================================

ConeScanResult cone_scan(const ExperimentConfig& cfg) {
    if (cfg.t_grid.empty()) throw std::invalid_argument("cone scan needs a time grid");
    if (cfg.delta <= 0) throw std::invalid_argument("cone threshold must be positive");

    Workspace ws(cfg);
    ConeScanResult res;
    res.t_grid = cfg.t_grid;
    res.k_used = cfg.dynamics_k.value_or(-1.0);

    const ZeroChain chain_k =
        cfg.dynamics_k ? truncate(ws.chain, *cfg.dynamics_k, ws.x0) : ws.chain;
    bool use_quadratic = false;
    res.engine = resolve_engine(cfg, evolution_region(chain_k, ws.x0).size(), &use_quadratic);

    const auto by_distance = probe_sites_by_distance(*ws.graph, ws.x0);
    for (const auto& [d, sites] : by_distance) res.distances.push_back(d);
    const std::size_t n_t = res.t_grid.size();
    const std::size_t n_d = res.distances.size();
    res.table.assign(n_t, std::vector<double>(n_d, 0.0));

    // ||| chain |||_G on the untruncated model, for the c_lr proxy
    res.tnorm_G = uniform_norm(ws.chain, cfg.G, default_time_samples(cfg.s, cfg.s + 1.0));

    if (use_quadratic) {
        require_sigma_x_for_quadratic(cfg.observable);
        require_sigma_x_for_quadratic(cfg.probe);
        QuadraticChain qchain = cfg.model.build_quadratic();
        if (cfg.dynamics_k) qchain = qchain.truncated(*cfg.dynamics_k);
        const QuadraticPropagator prop(qchain);
        const auto a = quadratic_sigma_x(ws.graph->size(), ws.x0);
        res.a_norm = quadratic_norm(a);
        res.b_norm = 1.0;
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = prop.evolve(cfg.s, res.t_grid[it], a);
            std::size_t id = 0;
            for (const auto& [d, sites] : by_distance) {
                double best = 0.0;
                for (std::size_t y : sites)
                    best = std::max(best, quadratic_commutator_norm(
                                              evolved, quadratic_sigma_x(ws.graph->size(), y)));
                res.table[it][id++] = best;
            }
        });
    } else {
        const auto a = pauli(ws.ctx, ws.x0, axis_of(cfg.observable));
        res.a_norm = op_norm(a);
        EvolutionSession session(chain_k, cfg.integrator, cfg.step_size, cfg.tolerance);
        session.evolve(cfg.s, res.t_grid.back(), a);  // warm the region cache
        std::vector<LatticeOperator> probes;
        std::vector<std::size_t> probe_offset;
        for (const auto& [d, sites] : by_distance) {
            probe_offset.push_back(probes.size());
            for (std::size_t y : sites) probes.push_back(pauli(ws.ctx, y, axis_of(cfg.probe)));
        }
        probe_offset.push_back(probes.size());
        res.b_norm = probes.empty() ? 1.0 : op_norm(probes.front());
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = session.evolve(cfg.s, res.t_grid[it], a);
            for (std::size_t id = 0; id < n_d; ++id) {
                double best = 0.0;
                for (std::size_t p = probe_offset[id]; p < probe_offset[id + 1]; ++p)
                    best = std::max(best, op_norm(commutator(evolved, probes[p])));
                res.table[it][id] = best;
            }
        });
    }

    // threshold radius per time, with boundary saturation flagged
    const double threshold = cfg.delta * res.a_norm * res.b_norm;
    res.threshold_radius.assign(n_t, 0.0);
    res.saturated.assign(n_t, 0);
    for (std::size_t it = 0; it < n_t; ++it) {
        long violating = -1;
        for (std::size_t id = 0; id < n_d; ++id)
            if (res.table[it][id] >= threshold) violating = long(id);
        if (violating < 0) {
            res.threshold_radius[it] = 0.0;
        } else if (violating + 1 >= long(n_d)) {
            res.saturated[it] = 1;  // the cone reached the last probed shell
            res.threshold_radius[it] = res.distances.back();
        } else {
            res.threshold_radius[it] = res.distances[std::size_t(violating + 1)];
        }
    }

    std::vector<double> ts, rs;
    for (std::size_t it = 0; it < n_t; ++it) {
        if (res.saturated[it]) continue;
        ts.push_back(res.t_grid[it]);
        rs.push_back(res.threshold_radius[it]);
    }
    res.fit = compare_growth_models(ts, rs);
    res.fitted_velocity = res.fit.linear.slope;
    res.c_lr_proxy = res.tnorm_G > 0 ? res.fitted_velocity / res.tnorm_G : 0.0;
    return res;
}

// ============================================================================
// Cauchy scan
// ============================================================================

CauchyScanResult cauchy_scan(const ExperimentConfig& cfg) {
    if (cfg.k_list.empty()) throw std::invalid_argument("cauchy scan needs a truncation list");
    if (!cfg.c_lr) throw std::invalid_argument("cauchy scan needs the measured c_lr proxy");

    Workspace ws(cfg);
    const double mu = mu_of(cfg.F, cfg.G, ws.graph->dimension());
    if (!(cfg.nu > 0.0 && cfg.nu < mu))
        throw std::invalid_argument("nu must lie in (0, mu) for the cauchy scan");

    CauchyScanResult res;
    res.s_used = cfg.s;
    res.c_phi = growth_coefficient(ws.chain, cfg.G, ws.x0, default_time_samples(cfg.s, cfg.s + 1.0)).c_phi;
    if (res.c_phi <= 0) throw std::invalid_argument("degenerate chain: C_phi = 0, tau undefined");
    res.tau = tau_of(*cfg.c_lr, res.c_phi);
    res.t_used = cfg.t.value_or(cfg.s + res.tau);
    if (std::abs(res.t_used - cfg.s) > res.tau * (1.0 + 1e-9))
        throw std::invalid_argument("|t - s| exceeds the short-time window tau");

    double l_ref = cfg.l_ref.value_or(-1.0);
    for (double k : cfg.k_list)
        if (l_ref >= 0.0 && l_ref < k)
            throw std::invalid_argument("l_ref must dominate every k in the list");
    res.l_ref_used = l_ref;

    auto k_sorted = cfg.k_list;
    std::sort(k_sorted.begin(), k_sorted.end());

    bool use_quadratic = false;
    const ZeroChain ref_chain = l_ref >= 0.0 ? truncate(ws.chain, l_ref, ws.x0) : ws.chain;
    res.engine = resolve_engine(cfg, evolution_region(ref_chain, ws.x0).size(), &use_quadratic);

    std::vector<double> diffs(k_sorted.size(), 0.0);
    if (use_quadratic) {
        require_sigma_x_for_quadratic(cfg.observable);
        const QuadraticChain qfull = cfg.model.build_quadratic();
        const QuadraticChain qref = l_ref >= 0.0 ? qfull.truncated(l_ref) : qfull;
        const auto a = quadratic_sigma_x(ws.graph->size(), ws.x0);
        res.a_nu_norm =
            quadratic_localized_norm(a, DecayFunction::power_law(cfg.nu), ws.x0, ws.graph->size());
        const auto ref_evolved = QuadraticPropagator(qref).evolve(cfg.s, res.t_used, a);
        parallel_for(k_sorted.size(), cfg.threads, [&](std::size_t i) {
            const QuadraticPropagator prop(qfull.truncated(k_sorted[i]));
            const auto evolved = prop.evolve(cfg.s, res.t_used, a);
            diffs[i] = quadratic_norm({ref_evolved.form - evolved.form});
        });
    } else {
        const auto a = pauli(ws.ctx, ws.x0, axis_of(cfg.observable));
        res.a_nu_norm = localized_norm(a, DecayFunction::power_law(cfg.nu), ws.x0);
        EvolutionSession ref_session(ref_chain, cfg.integrator, cfg.step_size, cfg.tolerance);
        const auto ref_evolved = ref_session.evolve(cfg.s, res.t_used, a);
        parallel_for(k_sorted.size(), cfg.threads, [&](std::size_t i) {
            const auto cut = truncate(ws.chain, k_sorted[i], ws.x0);
            EvolutionSession session(cut, cfg.integrator, cfg.step_size, cfg.tolerance);
            diffs[i] = distance(ref_evolved, session.evolve(cfg.s, res.t_used, a));
        });
    }

    for (std::size_t i = 0; i < k_sorted.size(); ++i) {
        if (diffs[i] == 0.0) {
            res.excluded_k.push_back(k_sorted[i]);  // covering truncation, exact match
        } else {
            res.k_list.push_back(k_sorted[i]);
            res.differences.push_back(diffs[i]);
        }
    }
    for (std::size_t i = 0; i + 1 < res.differences.size(); ++i)
        if (res.differences[i + 1] > res.differences[i] * (1.0 + 1e-12))
            res.monotone = false;

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < res.k_list.size(); ++i) {
        lx.push_back(std::log1p(res.k_list[i]));
        ly.push_back(std::log(res.differences[i]));
    }
    res.loglog = linear_fit(lx, ly);
    return res;
}

// ============================================================================
// nu-norm growth scan
// ============================================================================

GrowthScanResult nu_norm_growth_scan(const ExperimentConfig& cfg) {
    if (cfg.t_grid.empty()) throw std::invalid_argument("growth scan needs a time grid");

    Workspace ws(cfg);
    const double mu = mu_of(cfg.F, cfg.G, ws.graph->dimension());
    if (!(cfg.nu > 0.0 && cfg.nu < mu))
        throw std::invalid_argument("nu must lie in (0, mu) for the growth scan");

    GrowthScanResult res;
    res.t_grid = cfg.t_grid;
    res.k_used = cfg.dynamics_k.value_or(-1.0);
    res.c_phi = growth_coefficient(ws.chain, cfg.G, ws.x0, default_time_samples(cfg.s, cfg.s + 1.0)).c_phi;

    const ZeroChain chain_k =
        cfg.dynamics_k ? truncate(ws.chain, *cfg.dynamics_k, ws.x0) : ws.chain;
    bool use_quadratic = false;
    res.engine = resolve_engine(cfg, evolution_region(chain_k, ws.x0).size(), &use_quadratic);

    const DecayFunction f_nu = DecayFunction::power_law(cfg.nu);
    const std::size_t n_t = res.t_grid.size();
    res.nu_norms.assign(n_t, 0.0);

    if (use_quadratic) {
        require_sigma_x_for_quadratic(cfg.observable);
        QuadraticChain qchain = cfg.model.build_quadratic();
        if (cfg.dynamics_k) qchain = qchain.truncated(*cfg.dynamics_k);
        const QuadraticPropagator prop(qchain);
        const auto a = quadratic_sigma_x(ws.graph->size(), ws.x0);
        res.a_nu_norm = quadratic_localized_norm(a, f_nu, ws.x0, ws.graph->size());
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = prop.evolve(cfg.s, res.t_grid[it], a);
            res.nu_norms[it] = quadratic_localized_norm(evolved, f_nu, ws.x0, ws.graph->size());
        });
    } else {
        const auto a = pauli(ws.ctx, ws.x0, axis_of(cfg.observable));
        res.a_nu_norm = localized_norm(a, f_nu, ws.x0);
        EvolutionSession session(chain_k, cfg.integrator, cfg.step_size, cfg.tolerance);
        session.evolve(cfg.s, res.t_grid.back(), a);  // warm the cache
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = session.evolve(cfg.s, res.t_grid[it], a);
            res.nu_norms[it] = localized_norm(evolved, f_nu, ws.x0);
        });
    }

    if (res.t_grid.front() == cfg.s)
        res.anchor_ok = std::abs(res.nu_norms.front() - res.a_nu_norm) <= 1e-10;

    std::vector<double> dts(n_t), lns(n_t);
    for (std::size_t i = 0; i < n_t; ++i) {
        dts[i] = res.t_grid[i] - cfg.s;
        lns[i] = std::log(std::max(res.nu_norms[i], 1e-300));
    }
    res.ln_fit = linear_fit(dts, lns);
    res.envelope = affine_envelope(dts, lns);
    res.gamma_proxy = res.c_phi > 0 ? res.ln_fit.slope / res.c_phi : 0.0;
    return res;
}

// ============================================================================
// Support radius scan
// ============================================================================

RadiusScanResult support_radius_scan(const ExperimentConfig& cfg) {
    if (cfg.t_grid.empty()) throw std::invalid_argument("radius scan needs a time grid");
    if (cfg.delta <= 0) throw std::invalid_argument("radius threshold must be positive");

    Workspace ws(cfg);
    RadiusScanResult res;
    res.t_grid = cfg.t_grid;
    res.k_used = cfg.dynamics_k.value_or(-1.0);
    res.degenerate = cfg.delta >= 1.0;

    const ZeroChain chain_k =
        cfg.dynamics_k ? truncate(ws.chain, *cfg.dynamics_k, ws.x0) : ws.chain;
    bool use_quadratic = false;
    res.engine = resolve_engine(cfg, evolution_region(chain_k, ws.x0).size(), &use_quadratic);

    const auto radii = ws.graph->realized_radii(ws.x0);
    const std::size_t n_t = res.t_grid.size();
    res.radii.assign(n_t, 0.0);
    res.achieved.assign(n_t, 0.0);

    if (use_quadratic) {
        require_sigma_x_for_quadratic(cfg.observable);
        QuadraticChain qchain = cfg.model.build_quadratic();
        if (cfg.dynamics_k) qchain = qchain.truncated(*cfg.dynamics_k);
        const QuadraticPropagator prop(qchain);
        const auto a = quadratic_sigma_x(ws.graph->size(), ws.x0);
        res.a_norm = quadratic_norm(a);
        const double threshold = cfg.delta * res.a_norm;
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = prop.evolve(cfg.s, res.t_grid[it], a);
            for (double r : radii) {
                const double residual = quadratic_ball_residual(evolved, ws.x0, r, ws.graph->size());
                if (residual <= threshold) {
                    res.radii[it] = r;
                    res.achieved[it] = residual / res.a_norm;
                    break;
                }
            }
        });
    } else {
        const auto a = pauli(ws.ctx, ws.x0, axis_of(cfg.observable));
        res.a_norm = op_norm(a);
        const double threshold = cfg.delta * res.a_norm;
        EvolutionSession session(chain_k, cfg.integrator, cfg.step_size, cfg.tolerance);
        session.evolve(cfg.s, res.t_grid.back(), a);  // warm the cache
        parallel_for(n_t, cfg.threads, [&](std::size_t it) {
            const auto evolved = session.evolve(cfg.s, res.t_grid[it], a);
            for (double r : radii) {
                const auto projected = conditional_expectation(evolved, ws.graph->ball(ws.x0, r));
                const double residual = distance(evolved, projected);
                if (residual <= threshold) {
                    res.radii[it] = r;
                    res.achieved[it] = residual / res.a_norm;
                    break;
                }
            }
        });
    }

    res.fit = compare_growth_models(res.t_grid, res.radii);

    // superlinear signature: r(t)/(t-s) never drops and ends above its start
    bool nondecreasing = true;
    double first_ratio = -1.0, last_ratio = -1.0;
    for (std::size_t i = 0; i < n_t; ++i) {
        const double dt = res.t_grid[i] - cfg.s;
        if (dt <= 0) continue;
        const double ratio = res.radii[i] / dt;
        if (first_ratio < 0) first_ratio = ratio;
        if (last_ratio >= 0 && ratio < last_ratio * (1.0 - 1e-12) - 1e-12) nondecreasing = false;
        last_ratio = ratio;
    }
    res.ratio_increasing = nondecreasing && last_ratio > first_ratio && first_ratio >= 0;
    return res;
}

}  // namespace lrlab
