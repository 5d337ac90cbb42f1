// Command-line driver: heat | solve | sweep | verify | export | schema.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "obbq/config.hpp"
#include "obbq/errors.hpp"
#include "obbq/field_io.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/operators.hpp"
#include "obbq/solver.hpp"
#include "obbq/sweep.hpp"
#include "obbq/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace obbq;

namespace {

constexpr int kExitInconclusive = 2;
constexpr int kExitVerifyFailed = 3;
constexpr int kExitUnexpected = 1;
int exit_code(ErrorCode c) { return 10 + static_cast<int>(c); }

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

RunConfig load(const Common& c) {
    json doc = json::object();
    if (!c.config.empty()) {
        std::ifstream in(c.config);
        if (!in) throw Error(ErrorCode::IoError, "cannot open config " + c.config);
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigError, "config " + c.config + " is not valid JSON: " + e.what());
        }
    }
    for (const auto& s : c.sets) apply_override(doc, s);
    RunConfig cfg = parse_config(doc);
    if (!c.out.empty()) cfg.output = c.out;
    return cfg;
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

HeatProfiles heat_for(const RunConfig& cfg, const HomogeneousData& data, const Grid& g) {
    if (cfg.cache.empty()) return compute_profiles(data, g, cfg.quadrature);
    return cached_profiles(data, g, cfg.quadrature, cfg.cache);
}

void write_heat_fields(const fs::path& dir, const HeatProfiles& p) {
    write_field(dir / "U0.obbq", p.velocity);
    write_field(dir / "Theta0.obbq", p.temperature);
    write_field(dir / "Theta0_faces.obbq", p.temperature_faces);
}

void write_state_fields(const fs::path& dir, const ContinuationState& s) {
    write_field(dir / "V.obbq", s.velocity);
    write_field(dir / "Psi.obbq", s.temperature);
    write_field(dir / "P.obbq", s.pressure);
}

json heat_report(const HeatProfiles& p) {
    const auto r = residual_profile_pde(p);
    const auto d = decay_constants(p);
    const auto l4 = gradient_l4_norms(p);
    return {{"profile_residual_velocity", r.velocity},
            {"profile_residual_temperature", r.temperature},
            {"decay_value", d.value},
            {"decay_gradient", d.gradient},
            {"velocity_divergence_max", velocity_divergence_max(p)},
            {"velocity_gradient_l4", l4[0]},
            {"temperature_gradient_l4", l4[1]}};
}

json identity_json(const EnergyIdentity& e) {
    json terms = json::object();
    for (const auto& t : e.terms) terms[t.name] = t.value;
    return {{"terms", terms}, {"sum", e.sum}, {"relative_defect", e.relative_defect}};
}

json energy_json(const EnergyReport& e) {
    return {{"temperature", identity_json(e.temperature)},
            {"velocity", identity_json(e.velocity)},
            {"estimate_lhs", e.estimate_lhs},
            {"estimate_rhs", e.estimate_rhs}};
}

ProgressFn printer() {
    return [](const IterationRecord& r) {
        std::fprintf(stderr, "lambda %.6f  it %3d  residual %.3e  |V|_H1 %.4e  |Psi|_H1 %.4e\n", r.lambda,
                     r.iteration, r.residual, r.velocity_h1, r.temperature_h1);
    };
}

// Last accepted state of a failed continuation, kept apart from profile outputs.
void write_failure(const fs::path& out, const ContinuationError& e, const json& config) {
    const fs::path dir = out / "failed";
    fs::create_directories(dir);
    const auto& s = e.state();
    write_state_fields(dir, s);
    write_convergence_csv(dir / "convergence.csv", s.history);
    write_json(dir / "failure.json", {{"error", std::string(error_name(e.code()))},
                                      {"message", e.what()},
                                      {"last_accepted_lambda", s.lambda},
                                      {"cutoff_index", s.cutoff_index},
                                      {"total_iterations", s.total_iterations},
                                      {"iterations_logged", s.history.size()},
                                      {"config", config}});
}

int cmd_heat(const Common& c) {
    const RunConfig cfg = load(c);
    const Grid g = make_grid(cfg.half_width, cfg.cells);
    const auto t0 = std::chrono::steady_clock::now();
    const HeatProfiles p = heat_for(cfg, make_data(cfg.data), g);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fs::create_directories(cfg.output);
    write_heat_fields(cfg.output, p);
    json rep = heat_report(p);
    rep["wall_seconds"] = secs;
    write_json(cfg.output / "heat.json", rep);
    write_json(cfg.output / "run.json", {{"command", "heat"}, {"config", to_json(cfg)}});
    std::cout << rep.dump(2) << "\n";
    return 0;
}

int cmd_solve(const Common& c) {
    const RunConfig cfg = load(c);
    const Grid g = make_grid(cfg.half_width, cfg.cells);
    const HeatProfiles p = heat_for(cfg, make_data(cfg.data), g);
    fs::create_directories(cfg.output);
    write_heat_fields(cfg.output, p);
    const OperatorSet ops(p, cfg.cutoff_index, VectorField(g), cfg.solver.scheme());
    const auto t0 = std::chrono::steady_clock::now();
    ContinuationState s;
    try {
        s = continue_to_one(ops, cfg.solver, printer());
    } catch (const ContinuationError& e) {
        write_failure(cfg.output, e, to_json(cfg));
        throw;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_state_fields(cfg.output, s);
    const AssembledProfiles a = assemble_profiles(s, p);
    write_field(cfg.output / "U.obbq", a.velocity);
    write_field(cfg.output / "Theta.obbq", a.temperature);
    write_convergence_csv(cfg.output / "convergence.csv", s.history);
    const SystemResidual r = system_residual(s, ops);
    json result = {{"kind", "solve"},
                   {"cutoff_index", cfg.cutoff_index},
                   {"residual", r.relative},
                   {"iterations", s.total_iterations},
                   {"wall_seconds", secs},
                   {"velocity_h1", h1_norm(s.velocity)},
                   {"temperature_h1", h1_norm(s.temperature)},
                   {"energy", energy_json(energy_identities(s, ops))},
                   {"heat", heat_report(p)}};
    write_json(cfg.output / "run.json", {{"command", "solve"}, {"config", to_json(cfg)}, {"result", result}});
    std::cout << result.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const Common& c) {
    RunConfig cfg = load(c);
    fs::create_directories(cfg.output);
    cfg.sweep.snapshot_dir = cfg.output / "radii";
    auto on_radius = [](const RadiusDiagnostics& d) {
        std::fprintf(stderr, "R %.3g  k %d  n %d  J %.6e  L %.6e  delta %s  residual %.2e  %.1fs\n", d.radius,
                     d.cutoff_index, d.cells, d.j, d.l,
                     d.delta ? std::to_string(*d.delta).c_str() : "-", d.residual, d.wall_seconds);
    };
    SweepResult res;
    try {
        res = run_sweep(make_data(cfg.data), {}, cfg.sweep, cfg.solver, on_radius);
    } catch (const ContinuationError& e) {
        write_failure(cfg.output, e, to_json(cfg));
        throw;
    }
    write_sweep_csv(cfg.output / "sweep.csv", res.diagnostics);
    write_heat_fields(cfg.output, res.heat);
    write_state_fields(cfg.output, res.state);
    write_field(cfg.output / "U.obbq", res.profiles.velocity);
    write_field(cfg.output / "Theta.obbq", res.profiles.temperature);
    write_convergence_csv(cfg.output / "convergence.csv", res.state.history);
    json radii = json::array();
    for (const auto& d : res.diagnostics)
        radii.push_back({{"R", d.radius},
                         {"k", d.cutoff_index},
                         {"n", d.cells},
                         {"J", d.j},
                         {"L", d.l},
                         {"delta", d.delta ? json(*d.delta) : json(nullptr)},
                         {"residual", d.residual},
                         {"estimate_lhs", d.estimate_lhs},
                         {"estimate_rhs", d.estimate_rhs}});
    json result = {{"kind", "sweep"},
                   {"status", status_name(res.status)},
                   {"cutoff_index", res.state.cutoff_index},
                   {"radii", radii}};
    write_json(cfg.output / "run.json", {{"command", "sweep"}, {"config", to_json(cfg)}, {"result", result}});
    std::cout << result.dump(2) << "\n";
    return res.status == SweepStatus::Inconclusive ? kExitInconclusive : 0;
}

json read_run(const fs::path& dir) {
    std::ifstream in(dir / "run.json");
    if (!in) throw Error(ErrorCode::IoError, "missing " + (dir / "run.json").string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("run.json: ") + e.what());
    }
}

int cmd_verify(const std::string& in, std::vector<double> times) {
    const fs::path dir = in;
    const json run = read_run(dir);
    if (!run.contains("result")) throw Error(ErrorCode::InvalidArgument, "run directory holds no solution");
    const RunConfig cfg = parse_config(run.at("config"));
    const int k = run["result"].value("cutoff_index", cfg.cutoff_index);

    HeatProfiles hp;
    hp.velocity = read_vector(dir / "U0.obbq");
    hp.temperature = read_scalar(dir / "Theta0.obbq");
    hp.temperature_faces = read_vector(dir / "Theta0_faces.obbq");
    hp.grid = hp.velocity.grid;
    ContinuationState s;
    s.lambda = 1.0;
    s.cutoff_index = k;
    s.velocity = read_vector(dir / "V.obbq");
    s.temperature = read_scalar(dir / "Psi.obbq");
    s.pressure = read_scalar(dir / "P.obbq");
    s.forcing = VectorField(hp.grid);
    const VectorField u = read_vector(dir / "U.obbq");
    const ScalarField theta = read_scalar(dir / "Theta.obbq");
    const double h = hp.grid.spacing;

    VerificationReport rep;
    const OperatorSet ops(hp, k, s.forcing, cfg.solver.scheme());
    rep.add("solver_residual", system_residual(s, ops).relative, cfg.solver.tolerance);
    const EnergyReport e = energy_identities(s, ops);
    rep.add("energy_temperature_defect", e.temperature.relative_defect, 1e-5);
    rep.add("energy_velocity_defect", e.velocity.relative_defect, 1e-5);
    rep.details["energy"] = energy_json(e);

    ProfileSystemOptions opt;
    opt.exclusion_radius = 2.0 / k;
    const auto bss = residual_bss(u, theta, s.pressure, opt);
    rep.add("profile_momentum_residual", bss.momentum, 0.0, false);
    rep.add("profile_divergence_residual", bss.divergence, 0.0, false);
    rep.add("profile_temperature_residual", bss.temperature, 0.0, false);

    for (double lam : {0.5, 2.0}) {
        std::ostringstream name;
        name << "scaling_defect_" << lam;
        rep.add(name.str(), check_scaling(u, theta, lam), 5.0 * h * h);
    }

    const TimeLaw law = time_law_constants(s.velocity, s.temperature, times);
    rep.add("time_law_dispersion", law.dispersion, 1e-6);
    const bool nontrivial = law.value_norms[0] > 0.0;
    rep.add("value_exponent_error", std::abs(law.value_exponent - 0.25), 1e-3, nontrivial);
    rep.add("gradient_exponent_error", std::abs(law.gradient_exponent + 0.25), 1e-3, nontrivial);
    rep.details["time_law"] = {{"times", law.times},
                               {"value_norms", law.value_norms},
                               {"gradient_norms", law.gradient_norms},
                               {"c", law.c},
                               {"c_prime", law.c_prime},
                               {"value_exponent", law.value_exponent},
                               {"gradient_exponent", law.gradient_exponent}};

    rep.add("weak_l3_quasinorm", weak_l3_quasinorm(u), 0.0, false);
    if (max_abs(s.temperature) > 0.0) rep.add("hardy_ratio_psi", hardy_ratio(s.temperature), 2.05, false);
    rep.details["grid"] = {{"half_width", hp.grid.half_width}, {"cells", hp.grid.cells}, {"cutoff_index", k}};

    write_json(dir / "verify.json", rep.to_json());
    write_text_atomic(dir / "verify.csv", rep.to_csv());
    std::cout << rep.to_csv();
    return rep.passed() ? 0 : kExitVerifyFailed;
}

// "z=0" -> (2, 0.0).
std::pair<int, double> parse_plane(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq != 1 || spec.size() < 3 || std::string("xyz").find(spec[0]) == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "plane must look like z=0");
    try {
        return {static_cast<int>(std::string("xyz").find(spec[0])), std::stod(spec.substr(2))};
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "plane offset '" + spec.substr(2) + "' is not a number");
    }
}

int cmd_export(const std::string& in, const std::string& field, const std::string& component,
               const std::string& plane, const std::string& line, const std::string& out) {
    const fs::path dir = in;
    static const std::map<std::string, std::string> files{{"u", "U"},       {"theta", "Theta"}, {"p", "P"},
                                                          {"v", "V"},       {"psi", "Psi"},     {"u0", "U0"},
                                                          {"theta0", "Theta0"}};
    const auto f = files.find(field);
    if (f == files.end()) throw Error(ErrorCode::InvalidArgument, "unknown field '" + field + "'");
    if (plane.empty() == line.empty()) throw Error(ErrorCode::InvalidArgument, "give exactly one of --plane, --line");
    const FieldRecord rec = read_record(dir / (f->second + ".obbq"));
    const bool vector = rec.components.size() == 3;

    ScalarField s;
    VectorField v;
    if (vector)
        v = read_vector(dir / (f->second + ".obbq"));
    else
        s = read_scalar(dir / (f->second + ".obbq"));
    const Grid g = rec.grid;
    int comp = -1;  // magnitude
    if (vector) {
        if (component == "x") comp = 0;
        else if (component == "y") comp = 1;
        else if (component == "z") comp = 2;
        else if (component != "magnitude")
            throw Error(ErrorCode::InvalidArgument, "component must be x, y, z or magnitude");
    }
    auto value = [&](const std::array<double, 3>& x) {
        if (!vector) return sample(s, x);
        if (comp >= 0) return sample(v, comp, x);
        double m = 0.0;
        for (int a = 0; a < 3; ++a) m += std::pow(sample(v, a, x), 2);
        return std::sqrt(m);
    };
    const char* names = "xyz";
    std::ostringstream csv;
    csv.precision(17);
    if (!plane.empty()) {
        const auto [axis, offset] = parse_plane(plane);
        if (std::abs(offset) > g.half_width) throw Error(ErrorCode::InvalidArgument, "plane lies outside the domain");
        const int a1 = axis == 0 ? 1 : 0, a2 = axis == 2 ? 1 : 2;
        csv << names[a1] << "," << names[a2] << ",value\n";
        for (int j = 0; j < g.cells; ++j)
            for (int i = 0; i < g.cells; ++i) {
                std::array<double, 3> x{};
                x[axis] = offset;
                x[a1] = g.cell_center(i);
                x[a2] = g.cell_center(j);
                csv << x[a1] << "," << x[a2] << "," << value(x) << "\n";
            }
    } else {
        const auto axis = std::string("xyz").find(line);
        if (line.size() != 1 || axis == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "line must be x, y or z");
        csv << names[axis] << ",value\n";
        for (int i = 0; i < g.cells; ++i) {
            std::array<double, 3> x{};
            x[axis] = g.cell_center(i);
            csv << x[axis] << "," << value(x) << "\n";
        }
    }
    if (out.empty())
        std::cout << csv.str();
    else
        write_text_atomic(out, csv.str());
    return 0;
}

void error_line(const std::string& name, const std::string& message, int code) {
    std::cerr << json{{"error", name}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar Boussinesq profile solver"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON run configuration");
        sub->add_option("--set", common.sets, "override key=value, dotted keys")->allow_extra_args(false);
        sub->add_option("--out", common.out, "run directory (overrides output)");
    };
    auto* heat = app.add_subcommand("heat", "heat profiles of the data and their decay report");
    auto* solve = app.add_subcommand("solve", "continuation to lambda = 1 on one domain");
    auto* sweep = app.add_subcommand("sweep", "invading-domain sweep");
    for (auto* s : {heat, solve, sweep}) add_common(s);

    std::string in, field = "theta", component = "magnitude", plane, line, out;
    std::vector<double> times{0.5, 1.0, 2.0};
    auto* verify = app.add_subcommand("verify", "checks of a solved run directory");
    verify->add_option("--in", in, "run directory")->required();
    verify->add_option("--times", times, "times for the decay laws");
    auto* exp = app.add_subcommand("export", "CSV slices of a stored field");
    exp->add_option("--in", in, "run directory")->required();
    exp->add_option("--field", field, "u | theta | p | v | psi | u0 | theta0");
    exp->add_option("--component", component, "x | y | z | magnitude (vector fields)");
    exp->add_option("--plane", plane, "plane cut such as z=0");
    exp->add_option("--line", line, "axis through the origin: x, y or z");
    exp->add_option("--out", out, "output CSV (stdout when omitted)");
    auto* schema = app.add_subcommand("schema", "print every configuration key with its default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*heat) return cmd_heat(common);
        if (*solve) return cmd_solve(common);
        if (*sweep) return cmd_sweep(common);
        if (*verify) return cmd_verify(in, times);
        if (*exp) return cmd_export(in, field, component, plane, line, out);
        if (*schema) {
            std::cout << config_schema().dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        const int code = exit_code(e.code());
        error_line(std::string(error_name(e.code())), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        error_line("Unexpected", e.what(), kExitUnexpected);
        return kExitUnexpected;
    }
    return kExitUnexpected;
}
