#include "obbq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obbq/field_io.hpp"
#include "obbq/parallel.hpp"

namespace obbq {

void SolverConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "solver: " + m); };
    if (!(min_step > 0.0 && min_step <= initial_step && initial_step <= 1.0))
        fail("need 0 < min_step <= initial_step <= 1");
    if (!(bisection_factor > 0.0 && bisection_factor < 1.0)) fail("bisection_factor must lie in (0, 1)");
    if (!(tolerance > 0.0) || !(inner_tolerance > 0.0)) fail("tolerances must be positive");
    if (max_iterations < 1) fail("max_iterations must be >= 1");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) fail("relaxation must lie in (0, 1]");
    if (!(apriori_ceiling > 0.0)) fail("apriori_ceiling must be positive");
}

ContinuationState zero_state(const Grid& g, int cutoff_index, const VectorField& forcing) {
    ContinuationState s;
    s.velocity = VectorField(g);
    s.temperature = ScalarField(g);
    s.pressure = ScalarField(g);
    s.cutoff_index = cutoff_index;
    s.forcing = forcing.comp[0].empty() ? VectorField(g) : forcing;
    return s;
}

// ---------------------------------------------------------------------------
// Packing of interior faces for the component solvers.

namespace {

std::array<int, 3> interior_shape(const Grid& g, int a) {
    std::array<int, 3> d{g.cells, g.cells, g.cells};
    d[a] = g.cells - 1;
    return d;
}

void pack(const VectorField& v, int a, std::vector<double>& out) {
    const Layout l = v.layout(a);
    const auto d = interior_shape(v.grid, a);
    out.resize(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
    std::size_t m = 0;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                std::array<int, 3> p{i, j, k};
                p[a] += 1;
                out[m++] = v.comp[a][l.index(p[0], p[1], p[2])];
            }
}

void unpack(const std::vector<double>& in, int a, VectorField& v) {
    const Layout l = v.layout(a);
    const auto d = interior_shape(v.grid, a);
    std::fill(v.comp[a].begin(), v.comp[a].end(), 0.0);
    std::size_t m = 0;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                std::array<int, 3> p{i, j, k};
                p[a] += 1;
                v.comp[a][l.index(p[0], p[1], p[2])] = in[m++];
            }
}

Eigen::VectorXd flatten(const VectorField& v) {
    Eigen::VectorXd x(v.comp[0].size() + v.comp[1].size() + v.comp[2].size());
    std::size_t o = 0;
    for (int a = 0; a < 3; ++a)
        for (double c : v.comp[a]) x[static_cast<Eigen::Index>(o++)] = c;
    return x;
}

void unflatten(const Eigen::VectorXd& x, VectorField& v) {
    std::size_t o = 0;
    for (int a = 0; a < 3; ++a)
        for (double& c : v.comp[a]) c = x[static_cast<Eigen::Index>(o++)];
}

void zero_walls(VectorField& v) {
    const int n = v.grid.cells;
    for (int a = 0; a < 3; ++a) {
        const Layout l = v.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const std::array<int, 3> p{i, j, k};
                    if (p[a] == 0 || p[a] == n) v.comp[a][l.index(i, j, k)] = 0.0;
                }
    }
}

double squared(double x) { return x * x; }

}  // namespace

// ---------------------------------------------------------------------------

struct OperatorSet::Factors {
    double lambda = 0.0;
    KroneckerSolver scalar;
    std::array<KroneckerSolver, 3> vector;
};

OperatorSet::OperatorSet(const HeatProfiles& profiles, int cutoff_index, const VectorField& forcing,
                         DriftScheme scheme)
    : cutoff_{cutoff_index}, scheme_(scheme) {
    if (cutoff_index < 1) throw Error(ErrorCode::InvalidArgument, "cutoff index must be >= 1");
    auto p = std::make_shared<HeatProfiles>();
    p->grid = profiles.grid;
    p->velocity = profiles.velocity;
    p->temperature = profiles.temperature;
    p->temperature_faces = profiles.temperature_faces;
    p->quadrature = profiles.quadrature;
    p->data_hash = profiles.data_hash;
    profiles_ = std::move(p);
    const Grid& g = profiles_->grid;
    forcing_ = forcing.comp[0].empty() ? VectorField(g) : forcing;
    require_same_grid(g, forcing_.grid, "OperatorSet forcing");
    transport_ = leray_project(balance_wall_flux(profiles_->velocity)).first;
    unit_scale_ = compute_unit_scale();
}

VectorField OperatorSet::transport_velocity(const VectorField& v) const { return transport_ + v; }

VectorField OperatorSet::convection(const VectorField& w, const VectorField& v) const {
    VectorField out = advect(w, profiles_->velocity, Closure::Extrapolate);
    out += advect(w, v, Closure::Dirichlet);
    return out;
}

ScalarField OperatorSet::heat_flux_divergence(const VectorField& w, const ScalarField& psi) const {
    ScalarField out = div_product(profiles_->temperature_faces, w);
    out += div_product(psi, w, Closure::Dirichlet);
    return out;
}

const OperatorSet::Factors& OperatorSet::factors(double lambda) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!cached_ || cached_->lambda != lambda) {
        const Grid& g = grid();
        auto f = std::make_shared<Factors>();
        f->lambda = lambda;
        const Eigen::MatrixXd mc = axis_matrix(g, false, lambda, lambda / 3.0, scheme_);
        const Eigen::MatrixXd mf = axis_matrix(g, true, lambda, lambda / 3.0, scheme_);
        f->scalar = KroneckerSolver({mc, mc, mc});
        for (int a = 0; a < 3; ++a) {
            std::array<Eigen::MatrixXd, 3> m{mc, mc, mc};
            m[a] = mf;
            f->vector[a] = KroneckerSolver(m);
        }
        cached_ = std::move(f);
    }
    return *cached_;
}

ScalarField OperatorSet::solve_scalar(const ScalarField& b, double lambda) const {
    ScalarField u(b.grid);
    factors(lambda).scalar.solve(b.values, u.values);
    return u;
}

VectorField OperatorSet::solve_vector(const VectorField& b, double lambda) const {
    const Factors& f = factors(lambda);
    VectorField u(b.grid);
    parallel_for(3, [&](std::size_t begin, std::size_t end) {
        std::vector<double> packed;
        for (std::size_t a = begin; a < end; ++a) {
            pack(b, static_cast<int>(a), packed);
            f.vector[a].solve(packed, packed);
            unpack(packed, static_cast<int>(a), u);
        }
    });
    return u;
}

double OperatorSet::data_scale(double lambda) const { return std::abs(lambda) * unit_scale_; }

double OperatorSet::compute_unit_scale() const {
    const Grid& g = grid();
    VectorField m = advect(transport_, profiles_->velocity, Closure::Extrapolate);
    m *= -1.0;
    m += gravity_force(ScalarField(g), profiles_->temperature_faces, cutoff_);
    m += forcing_;
    zero_walls(m);
    const ScalarField t = div_product(profiles_->temperature_faces, transport_);
    return std::sqrt(squared(l2_norm(m)) + squared(l2_norm(t)));
}

// ---------------------------------------------------------------------------

namespace {

// lambda (-(W.grad)(U0+V) + gravity + F) on interior faces.
VectorField momentum_forcing(const OperatorSet& ops, const VectorField& w, const VectorField& v,
                             const ScalarField& psi, double lambda) {
    VectorField rhs = ops.convection(w, v);
    rhs *= -1.0;
    rhs += gravity_force(psi, ops.profiles().temperature_faces, ops.cutoff());
    rhs += ops.forcing();
    rhs *= lambda;
    zero_walls(rhs);
    return rhs;
}

double h1_squared(const ScalarField& f) { return squared(l2_norm(f)) + squared(h1_seminorm(f, Closure::Dirichlet)); }
double h1_squared(const VectorField& f) { return squared(l2_norm(f)) + squared(h1_seminorm(f, Closure::Dirichlet)); }

}  // namespace

double h1_norm(const ScalarField& f) { return std::sqrt(h1_squared(f)); }
double h1_norm(const VectorField& f) { return std::sqrt(h1_squared(f)); }

SystemResidual system_residual(const ContinuationState& s, const OperatorSet& ops) {
    const double lambda = s.lambda;
    const DriftScheme scheme = ops.scheme();
    const VectorField w = ops.transport_velocity(s.velocity);

    VectorField rm = principal_operator(s.velocity, lambda, scheme);
    rm += gradient(s.pressure);
    rm -= momentum_forcing(ops, w, s.velocity, s.temperature, lambda);
    // Wall rows: V must vanish there. principal_operator and the forcing are
    // zero on the walls, so the wall entries of rm are exactly the wall values
    // of V (plus grad P, which is zero on walls).
    const Grid& g = s.velocity.grid;
    const int n = g.cells;
    for (int a = 0; a < 3; ++a) {
        const Layout l = s.velocity.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const std::array<int, 3> p{i, j, k};
                    if (p[a] == 0 || p[a] == n) rm.comp[a][l.index(i, j, k)] = s.velocity.comp[a][l.index(i, j, k)];
                }
    }

    ScalarField rt = principal_operator(s.temperature, lambda, scheme);
    ScalarField flux = ops.heat_flux_divergence(w, s.temperature);
    axpy(lambda, flux, rt);

    SystemResidual r;
    r.momentum = l2_norm(rm);
    r.divergence = l2_norm(divergence(s.velocity));
    r.temperature = l2_norm(rt);
    r.scale = ops.data_scale(lambda);
    const double total = std::sqrt(squared(r.momentum) + squared(r.divergence) + squared(r.temperature));
    r.relative = r.scale > 0.0 ? total / r.scale : total;
    return r;
}

double residual_ssr(const ContinuationState& s, const OperatorSet& ops) { return system_residual(s, ops).relative; }

namespace {

void require_finite(const ContinuationState& s) {
    if (!all_finite(s.velocity) || !all_finite(s.temperature) || !all_finite(s.pressure))
        throw Error(ErrorCode::NonFiniteIterate, "non-finite Picard iterate at lambda " + std::to_string(s.lambda));
}

// Solves A V + grad P = rhs, div V = 0 with V = 0 on the walls.
std::pair<VectorField, ScalarField> solve_stokes(const OperatorSet& ops, const VectorField& rhs, double lambda,
                                                 const VectorField& guess, double tol) {
    const Grid& g = ops.grid();
    const DriftScheme scheme = ops.scheme();
    VectorField b = leray_project(rhs).first;
    zero_walls(b);

    VectorField v(g);
    if (l2_norm(b) > 0.0) {
        auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            VectorField f(g);
            unflatten(x, f);
            VectorField af = leray_project(principal_operator(f, lambda, scheme)).first;
            zero_walls(af);
            y = flatten(af);
        };
        auto precond = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            VectorField f(g);
            unflatten(x, f);
            VectorField u = leray_project(ops.solve_vector(f, lambda)).first;
            zero_walls(u);
            y = flatten(u);
        };
        const Eigen::VectorXd bb = flatten(b);
        Eigen::VectorXd x = flatten(guess);  // warm start from the previous iterate
        const auto res = gmres(apply, precond, bb, x, tol);
        if (!res.converged && res.relative_residual > 10.0 * tol) {
            std::ostringstream m;
            m << "velocity GMRES stalled at relative residual " << res.relative_residual << " after "
              << res.iterations << " iterations";
            throw Error(ErrorCode::InnerSolveFailure, m.str());
        }
        unflatten(x, v);
        zero_walls(v);
        // Remove any divergence left by the Krylov round-off.
        v = leray_project(v).first;
        zero_walls(v);
    }

    // Pressure: grad P carries the part of rhs - A V that the projection removed.
    VectorField rest = rhs;
    rest -= principal_operator(v, lambda, scheme);
    zero_walls(rest);
    ScalarField p(g);
    poisson_for(g)->solve(divergence(rest).values, p.values);
    return {std::move(v), std::move(p)};
}

}  // namespace

double picard_step(ContinuationState& s, const OperatorSet& ops, const SolverConfig& cfg) {
    const double lambda = s.lambda;
    require_same_grid(s.velocity.grid, ops.grid(), "picard_step");
    const VectorField w = ops.transport_velocity(s.velocity);

    // Temperature first; its new value feeds the buoyancy force.
    ScalarField trhs = ops.heat_flux_divergence(w, s.temperature);
    trhs *= -lambda;
    const ScalarField psi = ops.solve_scalar(trhs, lambda);

    const VectorField rhs = momentum_forcing(ops, w, s.velocity, psi, lambda);
    // Inexact inner solves: only as accurate as the outer residual needs,
    // never looser than 1e-3 and never tighter than the configured floor.
    double tol = cfg.inner_tolerance;
    if (!s.history.empty() && s.history.back().lambda == lambda)
        tol = std::max(tol, std::min(1e-3, 1e-2 * s.history.back().residual));
    auto [v, p] = solve_stokes(ops, rhs, lambda, s.velocity, tol);

    // At lambda = 0 the update is the exact solution; relaxing would only slow it.
    const double omega = lambda == 0.0 ? 1.0 : cfg.relaxation;
    s.temperature *= 1.0 - omega;
    axpy(omega, psi, s.temperature);
    s.velocity *= 1.0 - omega;
    axpy(omega, v, s.velocity);
    s.pressure *= 1.0 - omega;
    axpy(omega, p, s.pressure);
    require_finite(s);
    return residual_ssr(s, ops);
}

namespace {

IterationRecord record(const ContinuationState& s, int iteration, double residual) {
    return {s.lambda, iteration, residual, h1_norm(s.velocity), h1_norm(s.temperature)};
}

}  // namespace

int solve_at_lambda(ContinuationState& s, double lambda_target, const OperatorSet& ops, const SolverConfig& cfg) {
    s.lambda = lambda_target;
    double res = residual_ssr(s, ops);
    if (!std::isfinite(res)) throw Error(ErrorCode::NonFiniteIterate, "non-finite residual at start of lambda step");
    s.history.push_back(record(s, 0, res));
    if (res <= cfg.tolerance) return 0;
    double best = res;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        res = picard_step(s, ops, cfg);
        ++s.total_iterations;
        s.history.push_back(record(s, it, res));
        const IterationRecord& r = s.history.back();
        if (squared(r.velocity_h1) + squared(r.temperature_h1) > cfg.apriori_ceiling) {
            std::ostringstream m;
            m << "H1 norm squared " << squared(r.velocity_h1) + squared(r.temperature_h1) << " exceeds ceiling "
              << cfg.apriori_ceiling << " at lambda " << s.lambda;
            throw Error(ErrorCode::AprioriBoundExceeded, m.str());
        }
        if (!std::isfinite(res)) throw Error(ErrorCode::NonFiniteIterate, "non-finite residual");
        if (res <= cfg.tolerance) return it;
        best = std::min(best, res);
        if (res > 10.0 * best) {
            std::ostringstream m;
            m << "Picard residual grew to " << res << " (best " << best << ") at lambda " << s.lambda;
            throw Error(ErrorCode::PicardDiverged, m.str());
        }
    }
    std::ostringstream m;
    m << "Picard did not reach " << cfg.tolerance << " in " << cfg.max_iterations << " iterations at lambda "
      << s.lambda << " (residual " << res << ")";
    throw Error(ErrorCode::PicardDiverged, m.str());
}

ContinuationState continue_to_one(const OperatorSet& ops, const SolverConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    ContinuationState s = zero_state(ops.grid(), ops.cutoff().index, ops.forcing());
    auto report = [&](const ContinuationState& from, std::size_t first) {
        if (!progress) return;
        for (std::size_t i = first; i < from.history.size(); ++i) progress(from.history[i]);
    };

    std::size_t mark = s.history.size();
    solve_at_lambda(s, 0.0, ops, cfg);
    report(s, mark);

    double step = cfg.initial_step;
    while (s.lambda < 1.0) {
        // The current state may already solve the final problem (zero data).
        {
            ContinuationState probe = s;
            probe.lambda = 1.0;
            if (residual_ssr(probe, ops) <= cfg.tolerance) {
                s.lambda = 1.0;
                s.history.push_back(record(s, 0, residual_ssr(s, ops)));
                report(s, s.history.size() - 1);
                break;
            }
        }
        const double target = std::min(1.0, s.lambda + step);
        ContinuationState trial = s;
        mark = trial.history.size();
        try {
            solve_at_lambda(trial, target, ops, cfg);
            report(trial, mark);
            s = std::move(trial);
            // Regrow toward the initial step after a success.
            step = std::min(cfg.initial_step, step / cfg.bisection_factor);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PicardDiverged && e.code() != ErrorCode::NonFiniteIterate &&
                e.code() != ErrorCode::InnerSolveFailure)
                throw ContinuationError(e.code(), e.what(), std::move(trial));
            report(trial, mark);
            // Keep the failed attempt in the diagnostics.
            s.history.insert(s.history.end(), trial.history.begin() + static_cast<std::ptrdiff_t>(mark),
                             trial.history.end());
            s.total_iterations = trial.total_iterations;
            step *= cfg.bisection_factor;
            if (step < cfg.min_step) {
                std::ostringstream m;
                m << "continuation stalled at lambda " << s.lambda << ": step " << step << " below minimum "
                  << cfg.min_step << " (last failure: " << e.what() << ")";
                throw ContinuationError(ErrorCode::ContinuationStalled, m.str(), s);
            }
        }
    }
    return s;
}

ContinuationState continue_to_one(const HeatProfiles& profiles, int cutoff_index, const VectorField& forcing,
                                  const SolverConfig& cfg, const ProgressFn& progress) {
    const OperatorSet ops(profiles, cutoff_index, forcing, cfg.scheme());
    return continue_to_one(ops, cfg, progress);
}

// ---------------------------------------------------------------------------

namespace {

EnergyIdentity close_identity(std::vector<EnergyTerm> terms) {
    EnergyIdentity e;
    e.terms = std::move(terms);
    for (const auto& t : e.terms) {
        e.sum += t.value;
        e.magnitude += std::abs(t.value);
    }
    e.relative_defect = e.magnitude > 0.0 ? std::abs(e.sum) / e.magnitude : 0.0;
    return e;
}

}  // namespace

EnergyReport energy_identities(const ContinuationState& s, const OperatorSet& ops) {
    const double lambda = s.lambda;
    const VectorField w = ops.transport_velocity(s.velocity);
    const ScalarField& psi = s.temperature;
    const VectorField& v = s.velocity;
    const HeatProfiles& p = ops.profiles();

    EnergyReport r;
    r.temperature = close_identity({
        {"grad_psi_squared", squared(h1_seminorm(psi, Closure::Dirichlet))},
        {"half_lambda_psi_squared", 0.5 * lambda * squared(l2_norm(psi))},
        {"lambda_drift_wall", lambda * drift_wall_term(psi)},
        {"lambda_background_transport", lambda * inner(psi, div_product(p.temperature_faces, w))},
        {"lambda_self_transport", lambda * inner(psi, div_product(psi, w, Closure::Dirichlet))},
    });

    r.velocity = close_identity({
        {"grad_v_squared", squared(h1_seminorm(v, Closure::Dirichlet))},
        {"half_lambda_v_squared", 0.5 * lambda * squared(l2_norm(v))},
        {"lambda_drift_wall", lambda * drift_wall_term(v)},
        {"lambda_background_convection", lambda * inner(v, advect(w, p.velocity, Closure::Extrapolate))},
        {"lambda_self_convection", lambda * inner(v, advect(w, v, Closure::Dirichlet))},
        {"minus_lambda_gravity", -lambda * inner(v, gravity_force(psi, p.temperature_faces, ops.cutoff()))},
        {"minus_lambda_forcing", -lambda * inner(v, ops.forcing())},
        {"pressure_work", inner(v, gradient(s.pressure))},
    });

    const double t_inf = max_abs(p.temperature);
    VectorField tu = p.velocity;
    for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < tu.comp[a].size(); ++i) tu.comp[a][i] *= p.temperature_faces.comp[a][i];
    r.estimate_lhs = 0.5 * squared(h1_seminorm(psi, Closure::Dirichlet)) + 0.5 * lambda * squared(l2_norm(psi));
    r.estimate_rhs = lambda * (t_inf * t_inf * squared(l2_norm(v)) + squared(l2_norm(tu)));
    return r;
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history) {
    std::ostringstream out;
    out.precision(17);
    out << "lambda,iteration,residual,velocity_h1,temperature_h1\n";
    for (const auto& r : history)
        out << r.lambda << ',' << r.iteration << ',' << r.residual << ',' << r.velocity_h1 << ','
            << r.temperature_h1 << '\n';
    write_text_atomic(path, out.str());
}

}  // namespace obbq
