#include <doctest.h>

#include <cmath>

#include "obbq/errors.hpp"
#include "obbq/initial_data.hpp"
#include "obbq/sweep.hpp"

using namespace obbq;

namespace {

ErrorCode validate_code(const SweepConfig& c) {
    try {
        c.validate();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("sweep config invariants") {
    SweepConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.cutoff_for(2) == 16);
    CHECK(c.grid_for(1).cells == 32);
    CHECK(c.inner_half_width() == 2.0);

    SweepConfig one = c;
    one.radii = {4.0};
    CHECK(validate_code(one) == ErrorCode::ConfigError);
    SweepConfig shrinking = c;
    shrinking.radii = {8.0, 4.0};
    CHECK(validate_code(shrinking) == ErrorCode::ConfigError);
    SweepConfig mismatched = c;
    mismatched.cutoff_indices = {4, 8};
    CHECK(validate_code(mismatched) == ErrorCode::ConfigError);
    SweepConfig off_grid = c;
    off_grid.spacing = 0.3;
    CHECK(validate_code(off_grid) == ErrorCode::ConfigError);
    SweepConfig coarse = c;
    coarse.radii = {2.0, 4.0};
    CHECK(validate_code(coarse) == ErrorCode::ConfigError);
    SweepConfig wide = c;
    wide.comparison_half_width = 4.0;
    CHECK(validate_code(wide) == ErrorCode::ConfigError);
}

TEST_CASE("sweep norm of a known field") {
    const Grid g = make_grid(2.0, 8);
    const ScalarField one(g, 1.0);
    // Unit field: L2^2 = volume 64, Dirichlet gradient only across the walls.
    const double grad = h1_seminorm(one, Closure::Dirichlet);
    CHECK(sweep_norm(one) == doctest::Approx(std::sqrt(32.0 + grad * grad)));
    CHECK(sweep_norm(ScalarField(g)) == 0.0);
}

TEST_CASE("assembling a zero perturbation returns the heat profiles") {
    const Grid g = make_grid(3.0, 8);
    HeatProfiles p = compute_profiles(HomogeneousData::swirl(1.0), g);
    const ContinuationState s = zero_state(g, 3, VectorField(g));
    const AssembledProfiles a = assemble_profiles(s, p);
    for (int c = 0; c < 3; ++c) CHECK(a.velocity.comp[c] == p.velocity.comp[c]);
    CHECK(a.temperature.values == p.temperature.values);
    CHECK(max_abs(a.pressure) == 0.0);
    const ContinuationState other = zero_state(make_grid(3.0, 10), 3, VectorField(make_grid(3.0, 10)));
    CHECK_THROWS_AS(assemble_profiles(other, p), Error);
}

TEST_CASE("zero data converge after two radii") {
    const SweepResult r = run_sweep(HomogeneousData(), {}, SweepConfig{}, SolverConfig{});
    REQUIRE(r.diagnostics.size() == 2);
    CHECK(r.status == SweepStatus::Converged);
    CHECK(*r.diagnostics[1].delta == 0.0);
    CHECK(r.diagnostics[1].j == 0.0);
    CHECK(status_name(r.status) == "converged");
}

TEST_CASE("small swirl sweep reports finite diagnostics and the temperature estimate") {
    SweepConfig c;
    c.radii = {2.0, 4.0};
    c.policy = CellPolicy::FixedCells;
    c.cells = 16;
    c.growth_factor = 10.0;  // small domains still grow fast
    int seen = 0;
    const SweepResult r = run_sweep(HomogeneousData::swirl(0.3), {}, c, SolverConfig{},
                                    [&](const RadiusDiagnostics&) { ++seen; });
    CHECK(seen == 2);
    REQUIRE(r.diagnostics.size() == 2);
    const auto& d = r.diagnostics[1];
    CHECK(d.cells == 16);
    CHECK(d.cutoff_index == 4);
    CHECK(d.j > 0.0);
    CHECK(std::isfinite(*d.delta));
    CHECK(d.residual <= 1e-8);
    CHECK(d.estimate_lhs <= d.estimate_rhs);
    // Two radii cannot show a decreasing sequence.
    CHECK(r.status == SweepStatus::Inconclusive);
    CHECK(r.profiles.velocity.grid == r.heat.grid);
}

TEST_CASE("a tight ceiling stops the sweep") {
    SweepConfig c;
    c.radii = {2.0, 4.0};
    c.policy = CellPolicy::FixedCells;
    c.cells = 16;
    c.ceiling = 1e-12;
    try {
        run_sweep(HomogeneousData::swirl(0.3), {}, c, SolverConfig{});
        FAIL("expected SweepDiverged");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SweepDiverged);
    }
}
