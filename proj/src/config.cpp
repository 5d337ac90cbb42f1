#include "obbq/config.hpp"

#include <fstream>
#include <map>

#include "obbq/errors.hpp"

namespace obbq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

std::string policy_name(CellPolicy p) { return p == CellPolicy::FixedCells ? "fixed_cells" : "fixed_spacing"; }

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

// Overlays `user` on `base`, rejecting keys absent from `base` and type changes.
void merge_strict(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) fail("config " + (path.empty() ? std::string("root") : path) + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) fail("unknown config key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object()) {
            merge_strict(slot, it.value(), key);
        } else {
            if (!same_kind(slot, it.value())) fail("config key '" + key + "' has the wrong type");
            slot = it.value();
        }
    }
}

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const RunConfig& c) {
    json j;
    j["data"] = {{"family", c.data.family},
                 {"amplitude", c.data.amplitude},
                 {"axis", c.data.axis},
                 {"degree", c.data.degree},
                 {"order", c.data.order},
                 {"table", c.data.table}};
    j["grid"] = {{"half_width", c.half_width}, {"cells", c.cells}};
    j["cutoff_index"] = c.cutoff_index;
    j["quadrature"] = {{"radial_nodes", c.quadrature.radial_nodes},
                       {"angular_nodes", c.quadrature.angular_nodes},
                       {"truncation_radius", c.quadrature.truncation_radius}};
    const SolverConfig& s = c.solver;
    j["solver"] = {{"initial_step", s.initial_step},
                   {"min_step", s.min_step},
                   {"bisection_factor", s.bisection_factor},
                   {"tolerance", s.tolerance},
                   {"max_iterations", s.max_iterations},
                   {"relaxation", s.relaxation},
                   {"inner_tolerance", s.inner_tolerance},
                   {"upwind", s.upwind},
                   {"apriori_ceiling", s.apriori_ceiling}};
    const SweepConfig& w = c.sweep;
    j["sweep"] = {{"radii", w.radii},
                  {"cutoff_indices", w.cutoff_indices},
                  {"comparison_half_width", w.comparison_half_width},
                  {"tolerance", w.tolerance},
                  {"policy", policy_name(w.policy)},
                  {"spacing", w.spacing},
                  {"cells", w.cells},
                  {"growth_factor", w.growth_factor},
                  {"ceiling", w.ceiling}};
    j["output"] = c.output.string();
    j["cache"] = c.cache.string();
    return j;
}

RunConfig parse_config(const json& user) {
    json doc = to_json(RunConfig{});
    merge_strict(doc, user, "");

    RunConfig c;
    const json& d = doc["data"];
    c.data.family = get<std::string>(d, "family");
    c.data.amplitude = get<double>(d, "amplitude");
    c.data.axis = get<Vec3>(d, "axis");
    c.data.degree = get<int>(d, "degree");
    c.data.order = get<int>(d, "order");
    c.data.table = get<std::string>(d, "table");

    c.half_width = get<double>(doc["grid"], "half_width");
    c.cells = get<int>(doc["grid"], "cells");
    c.cutoff_index = get<int>(doc, "cutoff_index");

    const json& q = doc["quadrature"];
    c.quadrature.radial_nodes = get<int>(q, "radial_nodes");
    c.quadrature.angular_nodes = get<int>(q, "angular_nodes");
    c.quadrature.truncation_radius = get<double>(q, "truncation_radius");

    const json& s = doc["solver"];
    c.solver.initial_step = get<double>(s, "initial_step");
    c.solver.min_step = get<double>(s, "min_step");
    c.solver.bisection_factor = get<double>(s, "bisection_factor");
    c.solver.tolerance = get<double>(s, "tolerance");
    c.solver.max_iterations = get<int>(s, "max_iterations");
    c.solver.relaxation = get<double>(s, "relaxation");
    c.solver.inner_tolerance = get<double>(s, "inner_tolerance");
    c.solver.upwind = get<bool>(s, "upwind");
    c.solver.apriori_ceiling = get<double>(s, "apriori_ceiling");

    const json& w = doc["sweep"];
    c.sweep.radii = get<std::vector<double>>(w, "radii");
    c.sweep.cutoff_indices = get<std::vector<int>>(w, "cutoff_indices");
    c.sweep.comparison_half_width = get<double>(w, "comparison_half_width");
    c.sweep.tolerance = get<double>(w, "tolerance");
    const auto policy = get<std::string>(w, "policy");
    if (policy == "fixed_spacing")
        c.sweep.policy = CellPolicy::FixedSpacing;
    else if (policy == "fixed_cells")
        c.sweep.policy = CellPolicy::FixedCells;
    else
        fail("sweep.policy must be fixed_spacing or fixed_cells");
    c.sweep.spacing = get<double>(w, "spacing");
    c.sweep.cells = get<int>(w, "cells");
    c.sweep.growth_factor = get<double>(w, "growth_factor");
    c.sweep.ceiling = get<double>(w, "ceiling");

    c.output = get<std::string>(doc, "output");
    c.cache = get<std::string>(doc, "cache");
    c.sweep.quadrature = c.quadrature;
    c.sweep.cache_dir = c.cache;

    // Semantic checks.
    static const std::map<std::string, int> families{
        {"zero", 0}, {"swirl", 1}, {"radial", 2}, {"harmonic", 3}, {"tabulated", 4}};
    if (!families.count(c.data.family)) fail("data.family '" + c.data.family + "' is not known");
    if (c.data.family == "tabulated" && c.data.table.empty()) fail("data.table is required for tabulated data");
    if (c.cutoff_index < 1) fail("cutoff_index must be >= 1");
    try {
        make_grid(c.half_width, c.cells);
        validate(c.quadrature);
    } catch (const Error& e) {
        fail(std::string("invalid grid or quadrature: ") + e.what());
    }
    c.solver.validate();
    c.sweep.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) fail("override '" + assignment + "' must look like key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) fail("override key '" + key + "' is malformed");
        if (!node->is_object()) fail("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

json config_schema() {
    static const std::map<std::string, std::string> help{
        {"data.family", "zero | swirl | radial | harmonic | tabulated"},
        {"data.amplitude", "scale factor of the sphere map"},
        {"data.axis", "swirl axis e in a (e x x)/|x|^2"},
        {"data.degree", "harmonic degree l"},
        {"data.order", "harmonic order m, |m| <= l"},
        {"data.table", "CSV with polar,azimuth,su1,su2,su3,stheta (tabulated family)"},
        {"grid.half_width", "R of the cube [-R, R]^3 (heat, solve)"},
        {"grid.cells", "cells per axis, even and >= 8 (heat, solve)"},
        {"cutoff_index", "k of the gravity cutoff rho(k x) (solve)"},
        {"quadrature.radial_nodes", "Gauss-Legendre nodes in radius, >= 32"},
        {"quadrature.angular_nodes", "polar Gauss-Legendre and azimuth trapezoid nodes, >= 64"},
        {"quadrature.truncation_radius", "kernel truncation in standard deviations, >= 6"},
        {"solver.initial_step", "first lambda step, also the largest"},
        {"solver.min_step", "stall threshold for the bisected step"},
        {"solver.bisection_factor", "step multiplier after a failed lambda step"},
        {"solver.tolerance", "relative residual of the full system"},
        {"solver.max_iterations", "Picard iterations per lambda"},
        {"solver.relaxation", "under-relaxation omega in (0, 1]"},
        {"solver.inner_tolerance", "floor of the GMRES relative tolerance"},
        {"solver.upwind", "first-order upwind drift instead of skew-centred"},
        {"solver.apriori_ceiling", "abort when ||V||_H1^2 + ||Psi||_H1^2 exceeds this"},
        {"sweep.radii", "strictly increasing domain half-widths"},
        {"sweep.cutoff_indices", "one k per radius; empty means k = R"},
        {"sweep.comparison_half_width", "inner cube for successive differences; 0 means R_1 / 2"},
        {"sweep.tolerance", "early stop when the inner difference falls below this"},
        {"sweep.policy", "fixed_spacing | fixed_cells"},
        {"sweep.spacing", "h for fixed_spacing"},
        {"sweep.cells", "n for fixed_cells"},
        {"sweep.growth_factor", "largest allowed growth of J or L between radii"},
        {"sweep.ceiling", "largest allowed J^2 + L^2"},
        {"output", "run directory"},
        {"cache", "heat-profile cache directory; empty disables"},
    };
    json out = json::object();
    std::function<void(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
        for (auto it = node.begin(); it != node.end(); ++it) {
            const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
            if (it.value().is_object()) {
                walk(it.value(), key);
                continue;
            }
            const json& v = it.value();
            const char* type = v.is_boolean()          ? "boolean"
                               : v.is_number_integer() ? "integer"
                               : v.is_number()         ? "number"
                               : v.is_array()          ? "array"
                                                       : "string";
            auto h = help.find(key);
            out[key] = {{"type", type}, {"default", v}, {"description", h == help.end() ? "" : h->second}};
        }
    };
    walk(to_json(RunConfig{}), "");
    return out;
}

HomogeneousData make_data(const DataConfig& d) {
    if (d.family == "zero") return HomogeneousData();
    if (d.family == "swirl") return HomogeneousData::swirl(d.amplitude, d.axis);
    if (d.family == "radial") return HomogeneousData::radial_temperature(d.amplitude);
    if (d.family == "harmonic") return HomogeneousData::spherical_harmonic(d.degree, d.order, d.amplitude);
    if (d.family == "tabulated") return HomogeneousData::tabulated(d.table).scaled(d.amplitude);
    fail("data.family '" + d.family + "' is not known");
}

}  // namespace obbq
