// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "obbq/errors.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/initial_data.hpp"
#include "obbq/operators.hpp"
#include "obbq/solver.hpp"
#include "obbq/sweep.hpp"
#include "obbq/verify.hpp"

namespace fs = std::filesystem;
using namespace obbq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

__attribute__((format(printf, 1, 2))) std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double norm3(const std::array<double, 3>& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

struct Context {
    fs::path cache;
    fs::path work;
    std::string cli;
};

// 1. Heat evolution of 1/|x| against erf(|x|/sqrt 2)/|x|.
Outcome heat_oracle(const Context&) {
    const Grid g = make_grid(6.0, 64);
    const auto data = HomogeneousData::radial_temperature(1.0);
    const ProfileParts cells_only{true, false};
    const auto t0 = std::chrono::steady_clock::now();
    const HeatProfiles p = compute_profiles(data, g, {}, cells_only);
    const double secs = seconds_since(t0);
    const Layout l = p.temperature.layout();
    double e1 = 0.0;
    for (int k = 0; k < g.cells; ++k)
        for (int j = 0; j < g.cells; ++j)
            for (int i = 0; i < g.cells; ++i) {
                const double r = norm3(node_position(g, l, i, j, k));
                const double exact = std::erf(r / std::sqrt(2.0)) / r;
                e1 = std::max(e1, std::abs(p.temperature(i, j, k) - exact) / exact);
            }
    // Finer quadrature on every fourth cell per axis.
    QuadratureConfig fine;
    fine.radial_nodes = 64;
    fine.angular_nodes = 128;
    double e2 = 0.0;
    for (int k = 1; k < g.cells; k += 4)
        for (int j = 2; j < g.cells; j += 4)
            for (int i = 3; i < g.cells; i += 4) {
                const auto x = node_position(g, l, i, j, k);
                const double r = norm3(x);
                const double exact = std::erf(r / std::sqrt(2.0)) / r;
                e2 = std::max(e2, std::abs(evaluate_profile(data, x, fine).temperature - exact) / exact);
            }
    return {e1 <= 1e-4 && e2 <= 1e-6 && secs < 300.0,
            fmt("max rel err %.2e on all cells (32/64 nodes, %.0f s), %.2e on 16^3 cells (64/128 nodes)", e1, secs,
                e2)};
}

// 2. Profile equation residual of U0 at n = 64 and 128, R = 6.
Outcome profile_residual(const Context&) {
    const auto data = HomogeneousData::swirl(1.0);
    const ProfileParts faces_only{false, false};
    double r[2];
    for (int t = 0; t < 2; ++t) {
        const HeatProfiles p = compute_profiles(data, make_grid(6.0, t == 0 ? 64 : 128), {}, faces_only);
        r[t] = residual_profile_pde(p).velocity;
    }
    const double ratio = r[0] / r[1];
    return {ratio >= 3.5 && ratio <= 4.5, fmt("residual %.3e -> %.3e, ratio %.3f", r[0], r[1], ratio)};
}

// Smooth bump supported in |x - c| < w.
double bump(const std::array<double, 3>& x, const std::array<double, 3>& c, double w) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) d += (x[a] - c[a]) * (x[a] - c[a]);
    d /= w * w;
    return d < 1.0 ? std::exp(-1.0 / (1.0 - d)) : 0.0;
}

// 3. Hardy ratio for random compactly supported fields and the Gaussian.
Outcome hardy(const Context&) {
    const Grid g = make_grid(8.0, 64);
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> centre(-4.0, 4.0), width(1.0, 3.0), amp(-1.0, 1.0);
    std::uniform_int_distribution<int> count(1, 4);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        struct B {
            std::array<double, 3> c;
            double w, a;
        };
        std::vector<B> bumps(static_cast<std::size_t>(count(rng)));
        for (auto& b : bumps) b = {{centre(rng), centre(rng), centre(rng)}, width(rng), amp(rng)};
        const ScalarField f = make_scalar(g, [&](const auto& x) {
            double v = 0.0;
            for (const auto& b : bumps) v += b.a * bump(x, b.c, b.w);
            return v;
        });
        worst = std::max(worst, hardy_ratio(f));
    }
    const ScalarField gauss = make_scalar(g, [](const auto& x) { return std::exp(-0.5 * norm3(x) * norm3(x)); });
    const double gr = hardy_ratio(gauss);
    return {worst <= 2.05 && std::abs(gr - std::sqrt(4.0 / 3.0)) <= 2e-2,
            fmt("max over 100 fields %.4f, Gaussian %.4f (target %.4f)", worst, gr, std::sqrt(4.0 / 3.0))};
}

// 4. Summation by parts for the drift, three resolutions.
Outcome summation_by_parts(const Context&) {
    std::vector<double> constants;
    std::string detail;
    for (int n : {16, 32, 64}) {
        const Grid g = make_grid(4.0, n);
        const ScalarField psi = make_scalar(g, [](const auto& x) {
            return bump(x, {0.3, -0.2, 0.1}, 2.5) - 0.5 * bump(x, {-1.0, 0.8, 0.4}, 1.5);
        });
        const double defect = std::abs(inner(drift(psi), psi) + 1.5 * inner(psi, psi));
        const double h1 = inner(psi, psi) + std::pow(h1_seminorm(psi, Closure::Dirichlet), 2);
        constants.push_back(defect / (g.spacing * g.spacing * h1));
        detail += fmt("n=%d C=%.2e  ", n, constants.back());
    }
    // One constant bounds every level and the sequence settles.
    const double c_max = *std::max_element(constants.begin(), constants.end());
    const bool settles = std::abs(constants[2] - constants[1]) <= std::abs(constants[1] - constants[0]) + 1e-12;
    return {c_max <= 1.0 && settles, detail + "bound C=1"};
}

// 5. Continuation endpoint and energy identities on R = 6, n = 64, k = 6.
Outcome homotopy_endpoint(const Context& ctx) {
    const Grid g = make_grid(6.0, 64);
    bool pass = true;
    std::string detail;
    for (const auto& [name, data] : {std::pair{"radial b=1", HomogeneousData::radial_temperature(1.0)},
                                     std::pair{"swirl a=1", HomogeneousData::swirl(1.0)}}) {
        const HeatProfiles p = cached_profiles(data, g, {}, ctx.cache);
        const OperatorSet ops(p, 6, VectorField(g));
        const auto t0 = std::chrono::steady_clock::now();
        const ContinuationState s = continue_to_one(ops, SolverConfig{});
        const double secs = seconds_since(t0);
        const double res = system_residual(s, ops).relative;
        const EnergyReport e = energy_identities(s, ops);
        const bool ok = s.lambda == 1.0 && res <= 1e-8 && e.temperature.relative_defect <= 1e-5 &&
                        e.velocity.relative_defect <= 1e-5;
        pass = pass && ok;
        detail += fmt("%s: residual %.2e, defects T %.1e V %.1e, %d its, %.0f s; ", name, res,
                      e.temperature.relative_defect, e.velocity.relative_defect, s.total_iterations, secs);
    }
    return {pass, detail};
}

// 6-8 share one sweep.
struct SweepRun {
    bool done = false;
    std::string error;
    SweepResult result;
};

SweepRun& sweep_run(const Context& ctx) {
    static SweepRun run;
    if (run.done) return run;
    run.done = true;
    SweepConfig cfg;
    cfg.radii = {4.0, 8.0, 16.0};
    cfg.spacing = 0.5;
    cfg.cache_dir = ctx.cache;
    try {
        run.result = run_sweep(HomogeneousData::radial_temperature(1.0), {}, cfg, SolverConfig{},
                               [](const RadiusDiagnostics& d) {
                                   std::fprintf(stderr, "  sweep R=%g n=%d J=%.6e L=%.6e delta=%s %.0f s\n",
                                                d.radius, d.cells, d.j, d.l,
                                                d.delta ? fmt("%.3e", *d.delta).c_str() : "-", d.wall_seconds);
                               });
    } catch (const Error& e) {
        run.error = std::string(error_name(e.code())) + ": " + e.what();
    }
    return run;
}

Outcome invading_domains(const Context& ctx) {
    const SweepRun& run = sweep_run(ctx);
    if (!run.error.empty()) return {false, run.error};
    const auto& d = run.result.diagnostics;
    if (d.size() < 3) return {false, fmt("sweep stopped after %zu radii", d.size())};
    auto e = [](const RadiusDiagnostics& r) { return r.j * r.j + r.l * r.l; };
    const double growth = e(d[2]) / e(d[1]) - 1.0;
    const bool decreasing = *d[2].delta < *d[1].delta;
    return {growth < 0.05 && decreasing,
            fmt("J^2+L^2: %.6e, %.6e, %.6e (last increase %.2f%%); delta %.3e -> %.3e", e(d[0]), e(d[1]), e(d[2]),
                100.0 * growth, *d[1].delta, *d[2].delta)};
}

Outcome scaling_law(const Context& ctx) {
    const SweepRun& run = sweep_run(ctx);
    if (!run.error.empty()) return {false, run.error};
    const auto& p = run.result.profiles;
    const double h = p.velocity.grid.spacing;
    const double a = check_scaling(p.velocity, p.temperature, 0.5);
    const double b = check_scaling(p.velocity, p.temperature, 2.0);
    return {a <= 5 * h * h && b <= 5 * h * h, fmt("defect %.2e (1/2), %.2e (2), bound %.3f", a, b, 5 * h * h)};
}

Outcome time_laws(const Context& ctx) {
    const SweepRun& run = sweep_run(ctx);
    if (!run.error.empty()) return {false, run.error};
    const auto& s = run.result.state;
    const TimeLaw law = time_law_constants(s.velocity, s.temperature, {0.5, 1.0, 2.0});
    const bool ok = law.dispersion <= 1e-6 && std::abs(law.value_exponent - 0.25) <= 1e-3 &&
                    std::abs(law.gradient_exponent + 0.25) <= 1e-3 && law.c > 0.0;
    return {ok, fmt("c %.6e, c' %.6e, dispersion %.1e, exponents %.6f / %.6f", law.c, law.c_prime, law.dispersion,
                    law.value_exponent, law.gradient_exponent)};
}

// 9. Small data: direct Picard at lambda = 1 against the continuation.
Outcome small_data(const Context& ctx) {
    const Grid g = make_grid(6.0, 32);
    const auto data = HomogeneousData::swirl(0.05) + HomogeneousData::radial_temperature(0.05);
    const HeatProfiles p = cached_profiles(data, g, {}, ctx.cache);
    const OperatorSet ops(p, 6, VectorField(g));
    const SolverConfig cfg;
    const ContinuationState a = continue_to_one(ops, cfg);
    ContinuationState b = zero_state(g, 6, VectorField(g));
    const int its = solve_at_lambda(b, 1.0, ops, cfg);
    const double dv = h1_norm(a.velocity - b.velocity), dt = h1_norm(a.temperature - b.temperature);
    const double diff = std::hypot(dv, dt);
    return {diff <= 1e-6 && h1_norm(a.velocity) > 0.0 && h1_norm(a.temperature) > 0.0,
            fmt("H1 difference %.2e (|V| %.3e, |Psi| %.3e), direct Picard %d its", diff, h1_norm(a.velocity),
                h1_norm(a.temperature), its)};
}

// 10. A stalled continuation is reported, never turned into a profile.
Outcome failure_honesty(const Context& ctx) {
    const Grid g = make_grid(4.0, 16);
    const HeatProfiles p = cached_profiles(HomogeneousData::swirl(30.0), g, {}, ctx.cache);
    std::string lib;
    bool lib_ok = false;
    try {
        continue_to_one(p, 4, VectorField(g), SolverConfig{});
        lib = "library returned a profile";
    } catch (const ContinuationError& e) {
        lib_ok = e.code() == ErrorCode::ContinuationStalled && e.state().lambda < 1.0 && !e.state().history.empty();
        lib = fmt("library: %s at lambda %.4f, %zu records", std::string(error_name(e.code())).c_str(),
                  e.state().lambda, e.state().history.size());
    }
    if (ctx.cli.empty()) return {false, lib + "; CLI path not given"};
    const fs::path out = ctx.work / "stall";
    fs::remove_all(out);
    const std::string cmd = ctx.cli +
                            " solve --set data.family=swirl --set data.amplitude=30 --set grid.half_width=4"
                            " --set grid.cells=16 --set cutoff_index=4 --set cache=" +
                            ctx.cache.string() + " --out " + out.string() + " >/dev/null 2>" +
                            (ctx.work / "stall.err").string();
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    const bool cli_ok = code != 0 && fs::exists(out / "failed" / "failure.json") && !fs::exists(out / "U.obbq") &&
                        !fs::exists(out / "Theta.obbq");
    return {lib_ok && cli_ok, lib + fmt("; CLI exit %d, diagnostics %s", code,
                                        fs::exists(out / "failed" / "failure.json") ? "written" : "missing")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    Context ctx;
    std::string cache = "acceptance_cache", work = "acceptance_work";
    std::vector<int> only;
    app.add_option("--cache", cache, "heat-profile cache directory");
    app.add_option("--work", work, "scratch directory");
    app.add_option("--cli", ctx.cli, "path of the command-line driver");
    app.add_option("criteria", only, "subset of criteria to run");
    CLI11_PARSE(app, argc, argv);
    ctx.cache = cache;
    ctx.work = work;
    fs::create_directories(ctx.work);

    const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
        {"heat profile oracle", heat_oracle},
        {"profile equation second order", profile_residual},
        {"Hardy ratio", hardy},
        {"summation by parts", summation_by_parts},
        {"homotopy endpoint and energy identities", homotopy_endpoint},
        {"invading-domain bound", invading_domains},
        {"scaling law", scaling_law},
        {"time laws", time_laws},
        {"small-data cross-check", small_data},
        {"failure honesty", failure_honesty},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s criterion %d (%s): %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
