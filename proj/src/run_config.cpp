#include "lrlab/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lrlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw ConfigError("config: " + message); }

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail("unknown key at " + where + "/" + key);
    }
}

double number_at(const json& obj, const std::string& where, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) fail(where + "/" + key + " must be a number");
    return obj.at(key).get<double>();
}

DecayFunction parse_decay(const json& j, const std::string& where) {
    check_keys(j, where, {"rule", "nu", "b", "grid", "values", "declared_nu"});
    const std::string rule = j.value("rule", "");
    if (rule == "power_law") {
        if (!j.contains("nu")) fail(where + ": power_law needs nu");
        return DecayFunction::power_law(j.at("nu").get<double>());
    }
    if (rule == "exponential") {
        if (!j.contains("b")) fail(where + ": exponential needs b");
        return DecayFunction::exponential(j.at("b").get<double>());
    }
    if (rule == "constant") return DecayFunction::constant();
    if (rule == "tabulated") {
        if (!j.contains("grid") || !j.contains("values")) fail(where + ": tabulated needs grid/values");
        std::optional<double> declared;
        if (j.contains("declared_nu")) declared = j.at("declared_nu").get<double>();
        return DecayFunction::tabulated(j.at("grid").get<std::vector<double>>(),
                                        j.at("values").get<std::vector<double>>(), declared);
    }
    fail(where + ": unknown decay rule \"" + rule + "\"");
}

std::vector<double> parse_grid(const json& j, const std::string& where) {
    if (j.is_array()) return j.get<std::vector<double>>();
    check_keys(j, where, {"from", "to", "points", "spacing"});
    const double from = number_at(j, where, "from", 0.0);
    const double to = number_at(j, where, "to", 1.0);
    const std::size_t points = std::size_t(number_at(j, where, "points", 21));
    const std::string spacing = j.value("spacing", "linear");
    if (points < 1) fail(where + ": points must be >= 1");
    if (spacing == "linear") return linspace(from, to, points);
    if (spacing == "geometric") {
        if (from <= 0 || to <= from) fail(where + ": geometric grid needs 0 < from < to");
        std::vector<double> out(points);
        for (std::size_t i = 0; i < points; ++i)
            out[i] = from * std::pow(to / from, points == 1 ? 0.0 : double(i) / double(points - 1));
        out.back() = to;
        return out;
    }
    fail(where + ": unknown spacing \"" + spacing + "\"");
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

DecayFunction decay_from_json_text(const std::string& text) {
    return parse_decay(json::parse(text), "decay");
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: parse error at line " +
                          std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }

    check_keys(j, "", {"model", "decay", "nu", "scan", "integrator", "limits", "threads", "seed",
                       "verify", "lemmas"});

    RunConfig rc;
    rc.raw_json = j.dump(2);
    auto& exp = rc.experiment;

    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, "/model", {"name", "length", "J", "h", "slope", "omega", "x0"});
        exp.model.name = m.value("name", "uniform_tfim");
        exp.model.length = std::size_t(number_at(m, "/model", "length", 10));
        exp.model.J = number_at(m, "/model", "J", 1.0);
        exp.model.h = number_at(m, "/model", "h", 1.0);
        exp.model.slope = number_at(m, "/model", "slope", 1.0);
        exp.model.omega = number_at(m, "/model", "omega", 1.0);
        if (m.contains("x0")) exp.model.x0 = m.at("x0").get<std::size_t>();
        if (exp.model.length == 0) fail("/model/length must be >= 1");
    }

    if (j.contains("decay")) {
        const auto& d = j.at("decay");
        check_keys(d, "/decay", {"F", "G"});
        if (d.contains("F")) exp.F = parse_decay(d.at("F"), "/decay/F");
        if (d.contains("G")) exp.G = parse_decay(d.at("G"), "/decay/G");
    }
    if (j.contains("nu")) exp.nu = j.at("nu").get<double>();

    if (j.contains("scan")) {
        const auto& s = j.at("scan");
        check_keys(s, "/scan",
                   {"t_grid", "k", "k_list", "l_ref", "delta", "s", "t", "observable", "probe",
                    "c_lr"});
        if (s.contains("t_grid")) exp.t_grid = parse_grid(s.at("t_grid"), "/scan/t_grid");
        if (s.contains("k_list")) exp.k_list = s.at("k_list").get<std::vector<double>>();
        if (s.contains("k")) {
            if (s.at("k").is_string()) {
                if (s.at("k").get<std::string>() != "full") fail("/scan/k must be a number or \"full\"");
            } else {
                exp.dynamics_k = s.at("k").get<double>();
            }
        }
        if (s.contains("l_ref")) {
            if (s.at("l_ref").is_string()) {
                if (s.at("l_ref").get<std::string>() != "full")
                    fail("/scan/l_ref must be a number or \"full\"");
            } else {
                exp.l_ref = s.at("l_ref").get<double>();
            }
        }
        exp.delta = number_at(s, "/scan", "delta", exp.delta);
        exp.s = number_at(s, "/scan", "s", exp.s);
        if (s.contains("t")) exp.t = s.at("t").get<double>();
        exp.observable = s.value("observable", exp.observable);
        exp.probe = s.value("probe", exp.probe);
        if (s.contains("c_lr")) exp.c_lr = s.at("c_lr").get<double>();
    }

    if (j.contains("integrator")) {
        const auto& i = j.at("integrator");
        check_keys(i, "/integrator", {"kind", "step_size", "tolerance", "engine"});
        try {
            exp.integrator = integrator_from_string(i.value("kind", "auto"));
            exp.engine = engine_from_string(i.value("engine", "auto"));
        } catch (const std::invalid_argument& e) {
            fail(std::string("/integrator: ") + e.what());
        }
        exp.step_size = number_at(i, "/integrator", "step_size", exp.step_size);
        exp.tolerance = number_at(i, "/integrator", "tolerance", exp.tolerance);
        if (exp.step_size <= 0) fail("/integrator/step_size must be positive");
        if (exp.tolerance <= 0) fail("/integrator/tolerance must be positive");
    }

    if (j.contains("limits")) {
        const auto& l = j.at("limits");
        check_keys(l, "/limits", {"site_cap", "dense_dim_cap"});
        exp.site_cap = std::size_t(number_at(l, "/limits", "site_cap", double(exp.site_cap)));
        exp.dense_dim_cap =
            std::size_t(number_at(l, "/limits", "dense_dim_cap", double(exp.dense_dim_cap)));
    }
    if (j.contains("threads")) {
        exp.threads = j.at("threads").get<int>();
        if (exp.threads < 1) fail("/threads must be >= 1");
    }
    if (j.contains("seed")) exp.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        check_keys(v, "/verify",
                   {"length", "pairs", "regions", "tolerance", "fermion_length", "flavors"});
        rc.verify.length = std::size_t(number_at(v, "/verify", "length", 6));
        rc.verify.pairs = int(number_at(v, "/verify", "pairs", 100));
        rc.verify.regions = int(number_at(v, "/verify", "regions", 10));
        rc.verify.tolerance = number_at(v, "/verify", "tolerance", 1e-10);
        rc.verify.fermion_length = std::size_t(number_at(v, "/verify", "fermion_length", 3));
        rc.verify.flavors = int(number_at(v, "/verify", "flavors", 1));
    }

    if (j.contains("lemmas")) {
        const auto& l = j.at("lemmas");
        check_keys(l, "/lemmas", {"summability", "sup_check", "truncation"});
        if (l.contains("summability")) {
            const auto& s = l.at("summability");
            check_keys(s, "/lemmas/summability", {"length", "epsilon", "r_max", "schedule_points"});
            rc.lemmas.chain_length = std::size_t(number_at(s, "/lemmas/summability", "length", 2000001));
            rc.lemmas.epsilon = number_at(s, "/lemmas/summability", "epsilon", 1.0);
            rc.lemmas.r_max = number_at(s, "/lemmas/summability", "r_max", 1e6);
            rc.lemmas.schedule_points =
                std::size_t(number_at(s, "/lemmas/summability", "schedule_points", 25));
        }
        if (l.contains("sup_check")) {
            const auto& s = l.at("sup_check");
            check_keys(s, "/lemmas/sup_check", {"F", "nu", "k_max", "m_grid_density"});
            if (s.contains("F")) rc.lemmas.sup_F = parse_decay(s.at("F"), "/lemmas/sup_check/F");
            rc.lemmas.sup_nu = number_at(s, "/lemmas/sup_check", "nu", 4.0);
            rc.lemmas.sup_k_max = number_at(s, "/lemmas/sup_check", "k_max", 100.0);
            rc.lemmas.sup_density = number_at(s, "/lemmas/sup_check", "m_grid_density", 16.0);
        }
        if (l.contains("truncation")) {
            const auto& s = l.at("truncation");
            check_keys(s, "/lemmas/truncation", {"k_list", "t_samples"});
            if (s.contains("k_list"))
                rc.lemmas.truncation_k_list = s.at("k_list").get<std::vector<double>>();
            rc.lemmas.truncation_samples =
                std::size_t(number_at(s, "/lemmas/truncation", "t_samples", 5));
        }
    }
    return rc;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace lrlab
