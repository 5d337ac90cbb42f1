#include "obbq/sweep.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "obbq/errors.hpp"
#include "obbq/field_io.hpp"

namespace obbq {

void SweepConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "sweep: " + m); };
    if (radii.size() < 2) fail("need at least two radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) fail("radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) fail("radii must be strictly increasing");
    }
    if (!cutoff_indices.empty()) {
        if (cutoff_indices.size() != radii.size()) fail("one cutoff index per radius");
        for (std::size_t i = 0; i < cutoff_indices.size(); ++i) {
            if (cutoff_indices[i] < 1) fail("cutoff indices must be >= 1");
            if (i > 0 && cutoff_indices[i] < cutoff_indices[i - 1]) fail("cutoff indices must be non-decreasing");
        }
    }
    const double r0 = inner_half_width();
    if (!(r0 > 0.0 && r0 < radii[0])) fail("comparison half-width must lie in (0, R_1)");
    if (!(tolerance >= 0.0)) fail("tolerance must be >= 0");
    if (!(growth_factor > 1.0)) fail("growth_factor must exceed 1");
    if (!(ceiling > 0.0)) fail("ceiling must be positive");
    if (policy == CellPolicy::FixedSpacing) {
        if (!(spacing > 0.0)) fail("spacing must be positive");
        for (double r : radii) {
            const double n = 2.0 * r / spacing;
            if (std::abs(n - std::round(n)) > 1e-9 * n) fail("every radius must be a multiple of spacing / 2");
        }
        const double m = r0 / spacing;
        if (std::abs(m - std::round(m)) > 1e-9 * std::max(m, 1.0))
            fail("comparison half-width must be a multiple of the spacing");
        if (2.0 * r0 / spacing < 8.0 - 1e-9) fail("comparison cube needs at least 8 cells per axis");
    }
    for (std::size_t i = 0; i < radii.size(); ++i) grid_for(i);  // throws InvalidGrid
}

int SweepConfig::cutoff_for(std::size_t i) const {
    if (!cutoff_indices.empty()) return cutoff_indices[i];
    return std::max(1, static_cast<int>(std::lround(radii[i])));
}

Grid SweepConfig::grid_for(std::size_t i) const {
    if (policy == CellPolicy::FixedCells) return make_grid(radii[i], cells);
    return make_grid(radii[i], static_cast<int>(std::lround(2.0 * radii[i] / spacing)));
}

std::string status_name(SweepStatus s) {
    switch (s) {
        case SweepStatus::Converged: return "converged";
        case SweepStatus::Decreasing: return "decreasing";
        case SweepStatus::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

AssembledProfiles assemble_profiles(const ContinuationState& s, const HeatProfiles& p) {
    require_same_grid(s.velocity.grid, p.grid, "assemble_profiles");
    require_same_grid(s.temperature.grid, p.grid, "assemble_profiles");
    return {p.velocity + s.velocity, p.temperature + s.temperature, s.pressure};
}

double sweep_norm(const VectorField& v) {
    const double a = l2_norm(v), b = h1_seminorm(v, Closure::Dirichlet);
    return std::sqrt(0.5 * a * a + b * b);
}

double sweep_norm(const ScalarField& psi) {
    const double a = l2_norm(psi), b = h1_seminorm(psi, Closure::Dirichlet);
    return std::sqrt(0.5 * a * a + b * b);
}

namespace {

// L2 difference of (V, Psi) on the inner cube [-r0, r0]^3.
double inner_difference(const ContinuationState& a, const ContinuationState& b, double r0) {
    const Grid& ga = a.velocity.grid;
    const Grid& gb = b.velocity.grid;
    if (std::abs(ga.spacing - gb.spacing) <= 1e-12 * ga.spacing) {
        const VectorField dv = restrict_to(a.velocity, r0) - restrict_to(b.velocity, r0);
        const ScalarField dt = restrict_to(a.temperature, r0) - restrict_to(b.temperature, r0);
        return std::hypot(l2_norm(dv), l2_norm(dt));
    }
    // Different spacings: compare on a grid with the finer of the two.
    const double h = std::min(ga.spacing, gb.spacing);
    int n = 2 * static_cast<int>(std::lround(r0 / h));
    n = std::max(8, n + (n % 2));
    const Grid c = make_grid(r0, n);
    const VectorField dv = interpolate_to(a.velocity, c) - interpolate_to(b.velocity, c);
    const ScalarField dt = interpolate_to(a.temperature, c) - interpolate_to(b.temperature, c);
    return std::hypot(l2_norm(dv), l2_norm(dt));
}

void write_snapshot(const std::filesystem::path& dir, const ContinuationState& s, const HeatProfiles& p) {
    std::filesystem::create_directories(dir);
    const AssembledProfiles a = assemble_profiles(s, p);
    write_field(dir / "V.obbq", s.velocity);
    write_field(dir / "Psi.obbq", s.temperature);
    write_field(dir / "P.obbq", s.pressure);
    write_field(dir / "U.obbq", a.velocity);
    write_field(dir / "Theta.obbq", a.temperature);
}

}  // namespace

SweepResult run_sweep(const HomogeneousData& data, const ForcingFn& forcing, const SweepConfig& cfg,
                      const SolverConfig& scfg, const RadiusFn& on_radius) {
    cfg.validate();
    scfg.validate();
    validate(cfg.quadrature);
    const double r0 = cfg.inner_half_width();

    SweepResult out;
    std::optional<ContinuationState> previous;
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Grid g = cfg.grid_for(i);
        const int k = cfg.cutoff_for(i);
        HeatProfiles heat = cached_profiles(data, g, cfg.quadrature, cfg.cache_dir);
        const VectorField f = forcing ? make_vector(g, forcing) : VectorField(g);

        ContinuationState state;
        const OperatorSet ops(heat, k, f, scfg.scheme());
        try {
            state = continue_to_one(ops, scfg);
        } catch (const ContinuationError& e) {
            std::ostringstream m;
            m << "radius " << cfg.radii[i] << ": " << e.what();
            throw ContinuationError(e.code(), m.str(), e.state());
        }

        RadiusDiagnostics d;
        d.radius = cfg.radii[i];
        d.cutoff_index = k;
        d.cells = g.cells;
        d.j = sweep_norm(state.velocity);
        d.l = sweep_norm(state.temperature);
        d.residual = residual_ssr(state, ops);
        d.iterations = state.total_iterations;
        if (previous) d.delta = inner_difference(state, *previous, r0);
        {
            const double t_inf = max_abs(heat.temperature);
            VectorField tu = heat.velocity;
            for (int a = 0; a < 3; ++a)
                for (std::size_t n = 0; n < tu.comp[a].size(); ++n) tu.comp[a][n] *= heat.temperature_faces.comp[a][n];
            const double gp = h1_seminorm(state.temperature, Closure::Dirichlet), lp = l2_norm(state.temperature);
            const double lv = l2_norm(state.velocity), ltu = l2_norm(tu);
            d.estimate_lhs = gp * gp + lp * lp;
            d.estimate_rhs = 2.0 * (t_inf * t_inf * lv * lv + ltu * ltu);
        }
        d.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        if (!cfg.snapshot_dir.empty()) {
            std::ostringstream name;
            name << "R" << cfg.radii[i];
            write_snapshot(cfg.snapshot_dir / name.str(), state, heat);
        }
        out.diagnostics.push_back(d);
        if (on_radius) on_radius(d);

        if (d.j * d.j + d.l * d.l > cfg.ceiling) {
            std::ostringstream m;
            m << "J^2 + L^2 = " << d.j * d.j + d.l * d.l << " exceeds ceiling " << cfg.ceiling << " at radius "
              << d.radius;
            throw Error(ErrorCode::SweepDiverged, m.str());
        }
        if (out.diagnostics.size() >= 2) {
            const RadiusDiagnostics& p = out.diagnostics[out.diagnostics.size() - 2];
            // Growth from a negligible value is not a violation of the uniform bound.
            const double floor = 1e-6 * (p.j + p.l);
            if (d.j > cfg.growth_factor * p.j + floor || d.l > cfg.growth_factor * p.l + floor) {
                std::ostringstream m;
                m << "norms grew beyond factor " << cfg.growth_factor << " from radius " << p.radius << " to "
                  << d.radius << " (J " << p.j << " -> " << d.j << ", L " << p.l << " -> " << d.l << ")";
                throw Error(ErrorCode::SweepDiverged, m.str());
            }
        }

        out.state = std::move(state);
        out.heat = std::move(heat);
        previous = out.state;
        if (d.delta && *d.delta <= cfg.tolerance) break;
    }

    out.profiles = assemble_profiles(out.state, out.heat);
    const auto& diag = out.diagnostics;
    const double last = *diag.back().delta;
    if (last <= cfg.tolerance) {
        out.status = SweepStatus::Converged;
    } else {
        out.status = SweepStatus::Decreasing;
        for (std::size_t i = 2; i < diag.size(); ++i)
            if (!(*diag[i].delta < *diag[i - 1].delta)) out.status = SweepStatus::Inconclusive;
        if (diag.size() < 3) out.status = SweepStatus::Inconclusive;
    }
    return out;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<RadiusDiagnostics>& d) {
    std::ostringstream out;
    out.precision(17);
    out << "R,k,n,J,L,delta,residual,iterations,wall_seconds\n";
    for (const auto& r : d) {
        out << r.radius << ',' << r.cutoff_index << ',' << r.cells << ',' << r.j << ',' << r.l << ',';
        if (r.delta) out << *r.delta;
        out << ',' << r.residual << ',' << r.iterations << ',' << r.wall_seconds << '\n';
    }
    write_text_atomic(path, out.str());
}

}  // namespace obbq
