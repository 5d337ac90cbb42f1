#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "obbq/errors.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/initial_data.hpp"
#include "obbq/operators.hpp"
#include "obbq/solver.hpp"

using namespace obbq;

namespace {

const HeatProfiles& swirl_profiles() {
    static const HeatProfiles p = compute_profiles(HomogeneousData::swirl(0.5), make_grid(4.0, 8));
    return p;
}

const HeatProfiles& radial_profiles() {
    static const HeatProfiles p = compute_profiles(HomogeneousData::radial_temperature(0.5), make_grid(4.0, 8));
    return p;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("solver config rejects broken invariants") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
        SolverConfig c;
        mutate(c);
        return code_of([&] { c.validate(); });
    };
    CHECK(bad([](SolverConfig& c) { c.relaxation = 0.0; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.relaxation = 1.5; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.min_step = 0.5; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.initial_step = 2.0; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.bisection_factor = 1.0; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.max_iterations = 0; }) == ErrorCode::ConfigError);
    CHECK(bad([](SolverConfig& c) { c.tolerance = 0.0; }) == ErrorCode::ConfigError);
}

TEST_CASE("cached solves invert the principal operator") {
    const HeatProfiles& p = swirl_profiles();
    const Grid& g = p.grid;
    const OperatorSet ops(p, 4, VectorField(g));
    const auto b = make_scalar(g, [](const auto& x) { return std::exp(-x[0] * x[0]) * (1.0 + x[1] * x[2]); });
    for (double lambda : {0.0, 0.3, 1.0}) {
        const ScalarField u = ops.solve_scalar(b, lambda);
        const ScalarField r = principal_operator(u, lambda, DriftScheme::Centered) - b;
        CHECK(max_abs(r) < 1e-10 * max_abs(b));
    }
    VectorField bv = make_vector(g, [](int a, const auto& x) { return std::sin(x[a] + a) * std::exp(-x[1] * x[1]); });
    for (int a = 0; a < 3; ++a) {
        const Layout l = bv.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int idx[3] = {i, j, k};
                    if (idx[a] == 0 || idx[a] == l.dims[a] - 1) bv.comp[a][l.index(i, j, k)] = 0.0;
                }
    }
    const VectorField v = ops.solve_vector(bv, 0.7);
    const VectorField rv = principal_operator(v, 0.7, DriftScheme::Centered) - bv;
    // Wall rows of the operator are not part of the solve.
    for (int a = 0; a < 3; ++a) {
        const Layout l = v.layout(a);
        double worst = 0.0;
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int idx[3] = {i, j, k};
                    if (idx[a] == 0 || idx[a] == l.dims[a] - 1) continue;
                    worst = std::max(worst, std::abs(rv.comp[a][l.index(i, j, k)]));
                }
        CHECK(worst < 1e-10 * max_abs(bv));
    }
}

TEST_CASE("zero data stays at the zero state") {
    const Grid g = make_grid(4.0, 8);
    const HeatProfiles p = zero_profiles(g);
    const ContinuationState s = continue_to_one(p, 4, VectorField(g), SolverConfig{});
    CHECK(s.lambda == 1.0);
    CHECK(max_abs(s.velocity) == 0.0);
    CHECK(max_abs(s.temperature) == 0.0);
    CHECK(max_abs(s.pressure) == 0.0);
    CHECK(s.total_iterations == 0);
}

TEST_CASE("lambda zero gives the zero perturbation exactly") {
    const HeatProfiles& p = swirl_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    ContinuationState s = zero_state(p.grid, 4, VectorField(p.grid));
    CHECK(solve_at_lambda(s, 0.0, ops, SolverConfig{}) == 0);
    CHECK(max_abs(s.velocity) == 0.0);
    CHECK(residual_ssr(s, ops) == 0.0);
}

TEST_CASE("swirl continuation converges and satisfies the energy identities") {
    const HeatProfiles& p = swirl_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    SolverConfig cfg;
    int reports = 0;
    ContinuationState s = continue_to_one(ops, cfg, [&](const IterationRecord&) { ++reports; });
    CHECK(s.lambda == 1.0);
    CHECK(reports == static_cast<int>(s.history.size()));
    const SystemResidual r = system_residual(s, ops);
    CHECK(r.relative <= cfg.tolerance);
    CHECK(r.scale > 0.0);
    CHECK(h1_norm(s.velocity) > 0.0);

    const EnergyReport e = energy_identities(s, ops);
    CHECK(e.velocity.relative_defect < 1e-5);
    CHECK(e.temperature.relative_defect == 0.0);  // no temperature in the swirl data

    SUBCASE("a converged state is a fixed point of the Picard map") {
        ContinuationState t = s;
        const double res = picard_step(t, ops, cfg);
        CHECK(res < 10.0 * cfg.tolerance);
        CHECK(l2_norm(t.velocity - s.velocity) < 1e-6 * l2_norm(s.velocity));
    }
    SUBCASE("perturbing the state raises the residual") {
        ContinuationState t = s;
        t.velocity *= 1.01;
        CHECK(residual_ssr(t, ops) > 1e3 * cfg.tolerance);
    }
}

TEST_CASE("radial temperature data close both identities") {
    const HeatProfiles& p = radial_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    const ContinuationState s = continue_to_one(ops, SolverConfig{});
    CHECK(system_residual(s, ops).relative <= 1e-8);
    CHECK(h1_norm(s.temperature) > 0.0);
    const EnergyReport e = energy_identities(s, ops);
    CHECK(e.temperature.relative_defect < 1e-5);
    CHECK(e.velocity.relative_defect < 1e-5);
    CHECK(e.estimate_lhs > 0.0);
}

TEST_CASE("iteration budget exhaustion reports PicardDiverged") {
    const HeatProfiles& p = swirl_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    SolverConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-14;
    ContinuationState s = zero_state(p.grid, 4, VectorField(p.grid));
    CHECK(code_of([&] { solve_at_lambda(s, 1.0, ops, cfg); }) == ErrorCode::PicardDiverged);
}

TEST_CASE("repeated Picard failures stall the continuation with the path attached") {
    const HeatProfiles& p = swirl_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    SolverConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-14;
    cfg.min_step = 0.125;
    try {
        continue_to_one(ops, cfg);
        FAIL("expected a stall");
    } catch (const ContinuationError& e) {
        CHECK(e.code() == ErrorCode::ContinuationStalled);
        CHECK(e.state().lambda == 0.0);
        CHECK(e.state().history.size() > 1);
    }
}

TEST_CASE("the a priori ceiling aborts the path") {
    const HeatProfiles& p = swirl_profiles();
    const OperatorSet ops(p, 4, VectorField(p.grid));
    SolverConfig cfg;
    cfg.apriori_ceiling = 1e-12;
    try {
        continue_to_one(ops, cfg);
        FAIL("expected the ceiling to trip");
    } catch (const ContinuationError& e) {
        CHECK(e.code() == ErrorCode::AprioriBoundExceeded);
    }
}

TEST_CASE("convergence log has one row per record") {
    const auto path = std::filesystem::temp_directory_path() / "obbq_conv.csv";
    write_convergence_csv(path, {{0.0, 0, 0.0, 0.0, 0.0}, {0.25, 1, 0.5, 0.1, 0.2}});
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "lambda,iteration,residual,velocity_h1,temperature_h1");
    int rows = 0;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
}
